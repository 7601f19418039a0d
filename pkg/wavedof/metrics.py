# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import math
import logging
from dataclasses import dataclass, asdict, field

import numpy as np
import scipy.linalg
from scipy import optimize

from wavedof.channel import WAVENUMBER, ChannelEnsemble, compress_transform, wavenumber_block
from wavedof.exceptions import EigenDecompositionError, ValidationError
from wavedof.grid import eta_upper_bound
from wavedof.utilities import chunk_indices, parallel_map
"""EDoF and ergodic capacity of wavenumber-domain channels

Statistical EDoF counts the dominant coupling coefficients of each side, deterministic EDoF counts dominant
singular values of channel realizations, and the ergodic capacity with uniform power allocation is estimated by
Monte Carlo over H_w with i.i.d. CN(0, 1) entries.
"""

logger = logging.getLogger(__name__)

# relative slack on the energy threshold so equal weights are not pushed to the next prefix by rounding
PREFIX_SLACK = 1e-12
CHUNK_SIZE = 50
Z_95 = 1.96


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    value = np.asarray(value, dtype=float)
    if np.any(value <= 0):
        raise ValidationError('only positive ratios can be converted to dB')
    return 10.0 * np.log10(value)


@dataclass(frozen=True)
class EdofResult:
    eta_e_tx: int
    eta_e_rx: int
    eta_e: int
    gamma: float
    eta_u: int


@dataclass(frozen=True)
class CapacityResult:
    """Ergodic capacity in bits/s/Hz, with the 95% half-width (NaN for a single trial) and the summed terms"""
    mean_bits: float
    ci_half_width: float
    trials: int
    snr: float
    terms: int


@dataclass
class MetricsReport:
    gamma: float
    eta_u: int
    eta_e_tx: int
    eta_e_rx: int
    eta_e: int
    capacity_bits: float
    ci: float
    snr_db: float
    trials: int
    seed: int
    settings_hash: str
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_results(cls, edof, capacity, seed, settings_hash, snr_db=None, **extra):
        return cls(gamma=edof.gamma, eta_u=edof.eta_u, eta_e_tx=edof.eta_e_tx, eta_e_rx=edof.eta_e_rx,
                   eta_e=edof.eta_e, capacity_bits=capacity.mean_bits, ci=capacity.ci_half_width,
                   snr_db=float(linear_to_db(capacity.snr)) if snr_db is None else float(snr_db),
                   trials=capacity.trials, seed=seed, settings_hash=settings_hash, extra=extra)

    def to_dict(self):
        """JSON form, the extra entries are merged at the top level"""
        data = asdict(self)
        extra = data.pop('extra')
        data.update(extra)
        return data

    def to_row(self):
        """CSV row form, identical keys without the settings hash (it is part of the file header)"""
        data = self.to_dict()
        data.pop('settings_hash')
        return data


def _check_gamma(gamma):
    if not (0 < gamma < 1):
        raise ValidationError(f'gamma must satisfy 0 < gamma < 1, got {gamma}')


def energy_prefix_count(values, gamma):
    """Length of the shortest prefix of the descending values that holds gamma of the total

    The sort is stable, so equal values keep the canonical index order.

    :param values: non-negative weights
    :param gamma: energy fraction in (0, 1)
    :return: integer count
    """
    _check_gamma(gamma)
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValidationError('cannot count the prefix of an empty spectrum')
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValidationError('energy weights must be finite and non-negative')
    total = math.fsum(values)
    if total <= 0:
        raise ValidationError('all weights are zero, the EDoF is undefined')
    ordered = values[np.argsort(-values, kind='stable')]
    cumulative = np.cumsum(ordered)
    count = int(np.searchsorted(cumulative, gamma * total * (1 - PREFIX_SLACK), side='left')) + 1
    return min(count, values.size)


def _values(spectrum):
    return spectrum.values if hasattr(spectrum, 'values') else np.asarray(spectrum, dtype=float)


def edof_statistical(sig_t, sig_r, gamma=0.95):
    """EDoF from the coupling spectra of both sides

    :param sig_t: transmit CouplingSpectrum
    :param sig_r: receive CouplingSpectrum
    :param gamma: energy threshold in (0, 1)
    :return: EdofResult
    """
    eta_tx = energy_prefix_count(_values(sig_t), gamma)
    eta_rx = energy_prefix_count(_values(sig_r), gamma)
    return EdofResult(eta_tx, eta_rx, min(eta_tx, eta_rx), gamma, eta_upper_bound(sig_t.grid, sig_r.grid))


def _hermitian_eigenvalues(matrix):
    try:
        return scipy.linalg.eigvalsh(matrix)
    except (scipy.linalg.LinAlgError, ValueError) as error:
        raise EigenDecompositionError(f'eigendecomposition failed: {error}')


def _compression_factors(phi_t, phi_r):
    """(C_T, C_R) with C = S V^H, K_i = C_R A_i C_T^H has the nonzero singular values of phi_R A_i phi_T^H"""
    return compress_transform(phi_t), compress_transform(phi_r)


class DominantModeCounter:
    def __init__(self, method='correlation'):
        """Accumulates channel matrices block by block and counts their dominant singular values

        ``correlation`` keeps sum_i H_i H_i^H and sum_i H_i^H H_i, ``spectrum`` keeps the sum of the descending
        squared singular values of every realization.
        """
        if method not in ('correlation', 'spectrum'):
            raise ValidationError(f"method must be 'correlation' or 'spectrum', got {method!r}")
        self.method = method
        self.realizations = 0
        self._receive = None
        self._transmit = None
        self._spectrum = None

    def add(self, stack):
        count, rows, columns = stack.shape
        if self.method == 'correlation':
            # side by side for sum H H^H, stacked on top of each other for sum H^H H
            wide = stack.transpose(1, 0, 2).reshape(rows, count * columns)
            tall = stack.reshape(count * rows, columns)
            receive, transmit = wide @ wide.conj().T, tall.conj().T @ tall
            if self._receive is None:
                self._receive, self._transmit = receive, transmit
            else:
                self._receive += receive
                self._transmit += transmit
        else:
            try:
                singular = np.linalg.svd(stack, compute_uv=False)
            except np.linalg.LinAlgError as error:
                raise EigenDecompositionError(f'singular value decomposition failed: {error}')
            energy = np.sum(singular ** 2, axis=0)
            self._spectrum = energy if self._spectrum is None else self._spectrum + energy
        self.realizations += count

    def count(self, gamma):
        if self.realizations == 0:
            raise ValidationError('deterministic EDoF needs at least one channel realization')
        if self.method == 'spectrum':
            return energy_prefix_count(self._spectrum / self.realizations, gamma)
        count_rx = energy_prefix_count(np.clip(_hermitian_eigenvalues(self._receive), 0, None), gamma)
        count_tx = energy_prefix_count(np.clip(_hermitian_eigenvalues(self._transmit), 0, None), gamma)
        logger.debug(f'deterministic EDoF over {self.realizations} realizations: rx {count_rx}, tx {count_tx}')
        return min(count_rx, count_tx)


def edof_deterministic(ensemble, gamma=0.95, method='correlation', phi_t=None, phi_r=None):
    """EDoF counted on the singular values of channel realizations

    ``correlation`` counts the dominant eigenvalues of sum_i H_i H_i^H and of sum_i H_i^H H_i and returns the
    smaller count. ``spectrum`` averages the descending squared singular values of every realization and counts the
    dominant entries of that average. Wavenumber ensembles need phi_t and phi_r and are evaluated in compressed
    coordinates, so the spatial matrices are never formed.

    :param ensemble: ChannelEnsemble or array of shape (I, rows, cols)
    :param gamma: energy threshold in (0, 1)
    :param method: 'correlation' or 'spectrum'
    :param phi_t: transmit transform matrix for wavenumber ensembles
    :param phi_r: receive transform matrix for wavenumber ensembles
    :return: integer EDoF
    """
    _check_gamma(gamma)
    counter = DominantModeCounter(method)
    stack = ensemble.stack() if isinstance(ensemble, ChannelEnsemble) else np.asarray(ensemble)
    if stack.ndim == 2:
        stack = stack[None]
    if stack.ndim != 3 or stack.shape[0] == 0 or stack.size == 0:
        raise ValidationError('deterministic EDoF needs a non-empty stack of channel matrices')
    if isinstance(ensemble, ChannelEnsemble) and ensemble.kind == WAVENUMBER:
        if phi_t is None or phi_r is None:
            raise ValidationError('wavenumber ensembles need both transform matrices')
    if phi_t is not None and phi_r is not None:
        factor_t, factor_r = _compression_factors(phi_t, phi_r)
        stack = factor_r[None] @ stack @ factor_t.conj().T[None]
    counter.add(stack)
    return counter.count(gamma)


def edof_deterministic_drawn(sig_t, sig_r, phi_t, phi_r, realizations=200, seed=0, gamma=0.95,
                             method='correlation'):
    """edof_deterministic of draw_wavenumber_channel(sig_t, sig_r, seed, realizations), drawn block by block

    Only one block of realizations is held in memory, which keeps 10x10 apertures at small spacings tractable.
    """
    _check_gamma(gamma)
    if realizations < 1:
        raise ValidationError(f'realizations must be >= 1, got {realizations}')
    factor_t, factor_r = _compression_factors(phi_t, phi_r)
    counter = DominantModeCounter(method)
    for indices in chunk_indices(realizations, CHUNK_SIZE):
        counter.add(factor_r[None] @ wavenumber_block(sig_t, sig_r, seed, indices) @ factor_t.conj().T[None])
    return counter.count(gamma)


def _eigen_block(indices, sig_t, sig_r, seed):
    """Descending eigenvalues of D_R^1/2 H_w D_T H_w^H D_R^1/2 for the trials in indices"""
    weighted = wavenumber_block(sig_t, sig_r, seed, indices)
    gram = weighted @ weighted.conj().transpose(0, 2, 1)
    try:
        eigenvalues = np.linalg.eigvalsh(gram)
    except np.linalg.LinAlgError as error:
        raise EigenDecompositionError(f'eigendecomposition failed: {error}')
    return np.clip(eigenvalues[:, ::-1], 0, None)


def channel_eigenvalues(sig_t, sig_r, trials=500, seed=0, n_jobs=1):
    """Descending eigenvalue spectra tau of every Monte-Carlo trial, trial i uses child stream i

    The spectra do not depend on the element counts or the SNR, so one call serves every spacing and SNR of a
    sweep.

    :return: array of shape (trials, n_R)
    """
    if trials < 1:
        raise ValidationError(f'trials must be >= 1, got {trials}')
    values_t, values_r = _values(sig_t), _values(sig_r)
    blocks = parallel_map(lambda indices: _eigen_block(indices, values_t, values_r, seed),
                          chunk_indices(trials, CHUNK_SIZE), n_jobs=n_jobs)
    return np.concatenate(blocks)


def capacity_from_eigenvalues(eigenvalues, n_tx, n_rx, n_t, snr, terms):
    """Mean of sum over the largest terms of log2(1 + N_T N_R snr / n_T tau_i), trial values combined with fsum

    :param eigenvalues: (trials, k) descending spectra from channel_eigenvalues
    :param n_tx: transmit element count N_T
    :param n_rx: receive element count N_R
    :param n_t: number of transmit wavenumber indices n_T
    :param snr: linear SNR, 1/mu^2
    :param terms: number of summed eigenvalue terms
    :return: CapacityResult
    """
    if not (snr > 0 and math.isfinite(snr)):
        raise ValidationError(f'snr must be positive, got {snr}')
    available = min(eigenvalues.shape[1], n_t)
    if not (1 <= terms <= available):
        raise ValidationError(f'number of capacity terms must be between 1 and {available}, got {terms}')
    gain = n_tx * n_rx * snr / n_t
    per_trial = np.sum(np.log2(1.0 + gain * eigenvalues[:, :terms]), axis=1)
    trials = len(per_trial)
    mean = math.fsum(per_trial) / trials
    if trials > 1:
        spread = math.sqrt(math.fsum((per_trial - mean) ** 2) / (trials - 1))
        half_width = Z_95 * spread / math.sqrt(trials)
    else:
        half_width = float('nan')
    return CapacityResult(mean, half_width, trials, float(snr), int(terms))


def _available_terms(sig_t, sig_r):
    return min(len(_values(sig_t)), len(_values(sig_r)))


def ergodic_capacity(sig_t, sig_r, n_tx, n_rx, snr, trials=500, seed=0, n_jobs=1):
    """Ergodic capacity summing the eta_u largest eigenvalue terms

    :param sig_t: transmit CouplingSpectrum
    :param sig_r: receive CouplingSpectrum
    :param n_tx: transmit element count N_T
    :param n_rx: receive element count N_R
    :param snr: linear SNR
    :param trials: Monte-Carlo trials
    :param seed: seed, trial i uses child stream i
    :param n_jobs: joblib workers
    :return: CapacityResult
    """
    eigenvalues = channel_eigenvalues(sig_t, sig_r, trials, seed, n_jobs)
    terms = min(eta_upper_bound(sig_t.grid, sig_r.grid), _available_terms(sig_t, sig_r))
    return capacity_from_eigenvalues(eigenvalues, n_tx, n_rx, len(_values(sig_t)), snr, terms)


def capacity_with_edof_truncation(sig_t, sig_r, n_tx, n_rx, snr, eta_e, trials=500, seed=0, n_jobs=1):
    """Ergodic capacity summing only the eta_e largest eigenvalue terms of the same draws as ergodic_capacity"""
    if not 1 <= eta_e <= _available_terms(sig_t, sig_r):
        raise ValidationError(f'eta_e must be between 1 and {_available_terms(sig_t, sig_r)}, got {eta_e}')
    eigenvalues = channel_eigenvalues(sig_t, sig_r, trials, seed, n_jobs)
    return capacity_from_eigenvalues(eigenvalues, n_tx, n_rx, len(_values(sig_t)), snr, int(eta_e))


def capacity_asymptotic(sig_t, sig_r, n_tx, n_rx, snr):
    """Large-system deterministic equivalent of E log2 det(I + c H_w D_T H_w^H D_R), c = N_T N_R snr / n_T

    With r = sigma_R^2 and t = sigma_T^2 the approximation is

        sum_j ln(1 + c r_j a) + sum_i ln(1 + c t_i b) - c a b

    where a = sum_i t_i / (1 + c t_i b) and b = sum_j r_j / (1 + c r_j a). All eigenvalue terms are included.

    :return: capacity in bits/s/Hz
    """
    if not (snr > 0 and math.isfinite(snr)):
        raise ValidationError(f'snr must be positive, got {snr}')
    t = np.asarray(_values(sig_t), dtype=float)
    r = np.asarray(_values(sig_r), dtype=float)
    if t.sum() <= 0 or r.sum() <= 0:
        raise ValidationError('coupling spectra must not be all zero')
    gain = n_tx * n_rx * snr / len(t)

    def b_of(a):
        return np.sum(r / (1 + gain * r * a))

    def residual(a):
        return a - np.sum(t / (1 + gain * t * b_of(a)))

    a = optimize.brentq(residual, 0.0, float(t.sum()), xtol=1e-14, rtol=1e-12)
    b = b_of(a)
    nats = np.sum(np.log1p(gain * r * a)) + np.sum(np.log1p(gain * t * b)) - gain * a * b
    return float(nats / math.log(2))
