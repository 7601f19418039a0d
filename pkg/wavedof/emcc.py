# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import logging
from dataclasses import dataclass, asdict

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import signal, special, stats

from wavedof.coupling import CouplingSpectrum
from wavedof.exceptions import ApertureMismatchError, IllPosedConfigurationError, RankDeficientError, \
    ValidationError
from wavedof.pattern import RadiationPattern
from wavedof.channel import multipath_block
from wavedof.utilities import chunk_indices, parallel_map, write_table
"""Simulation-based coupling coefficients: multipath spatial channels are projected onto the wavenumber Fourier
basis by least squares, and the variance of every projected coefficient, divided by the mass its LS kernel
places on the visible disk, is the coupling coefficient estimate
"""

logger = logging.getLogger(__name__)

# diagonal entries of R below this fraction of the largest one count as rank loss
RANK_TOLERANCE = 1e-10
CHUNK_SIZE = 250
# pseudo-inverse rows per FFT autocorrelation batch
KERNEL_CHUNK = 32
CONFIDENCE = 0.95


@dataclass(frozen=True)
class EmccConfig:
    paths: int = 200
    realizations: int = 5000
    seed: int = 0
    ls_regularization: float = 1e-10
    ls_method: str = 'qr'
    variance_factor: float = 1.0
    normalize_kernel: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        if int(self.paths) < 1:
            raise ValidationError(f'paths must be >= 1, got {self.paths}')
        if int(self.realizations) < 2:
            raise ValidationError(f'realizations must be >= 2 to estimate a variance, got {self.realizations}')
        if int(self.seed) < 0:
            raise ValidationError(f'seed must be non-negative, got {self.seed}')
        if not self.ls_regularization >= 0:
            raise ValidationError(f'ls_regularization must be >= 0, got {self.ls_regularization}')
        if self.ls_method not in ('qr', 'normal'):
            raise ValidationError(f"ls_method must be 'qr' or 'normal', got {self.ls_method!r}")
        if self.variance_factor not in (1, 2):
            raise ValidationError(f'variance_factor must be 1 or 2, got {self.variance_factor}')
        if self.n_jobs == 0:
            raise ValidationError('n_jobs must not be 0')

    def to_dict(self):
        return asdict(self)


class EmccResult:
    def __init__(self, spectrum, ci_half_width, mean_residual, config):
        """Estimated spectrum with 95% confidence half-widths per index and the mean LS residual norm"""
        self.spectrum = spectrum
        self.ci_half_width = np.asarray(ci_half_width, dtype=float)
        self.mean_residual = float(mean_residual)
        self.config = config

    @property
    def grid(self):
        return self.spectrum.grid

    def to_frame(self):
        frame = self.spectrum.to_frame()
        frame['ci_half_width'] = self.ci_half_width
        return frame

    def write(self, path, fmt='csv', metadata=None):
        metadata = {**self.spectrum.metadata(), 'emcc': self.config.to_dict(), 'mean_residual': self.mean_residual,
                    **(metadata or {})}
        return write_table(self.to_frame(), path, fmt=fmt, metadata=metadata)


def basis_matrix(geom, grid):
    """Fourier basis E with E[i, (m_x, m_y)] = exp(j 2 pi (x_i m_x / len_x + y_i m_y / len_y))

    :param geom: ArrayGeometry of the array
    :param grid: WavenumberGrid of the same aperture
    :return: N x n complex matrix
    """
    if geom.aperture != grid.aperture:
        raise ApertureMismatchError(geom.aperture.label, grid.aperture.label)
    if geom.count <= len(grid):
        raise IllPosedConfigurationError(geom.count, len(grid))
    return np.exp(2j * np.pi * (geom.positions @ grid.anchors.T))


class LeastSquaresProjector:
    def __init__(self, basis, regularization=0.0, method='qr'):
        """Factorization of min ||E x - h||^2 + regularization ||x||^2, computed once and reused for every channel

        :param basis: N x n matrix E
        :param regularization: ridge weight, 0 for plain least squares
        :param method: 'qr' (column pivoted QR of the augmented system) or 'normal' (Cholesky of E^H E)
        """
        self.basis = np.asarray(basis, dtype=np.complex128)
        self.regularization = float(regularization)
        self.method = method
        n_rows, n_columns = self.basis.shape
        if n_rows <= n_columns and self.regularization == 0:
            raise IllPosedConfigurationError(n_rows, n_columns)
        if method == 'qr':
            system = self.basis
            if self.regularization > 0:
                system = np.vstack([system, np.sqrt(self.regularization) * np.eye(n_columns)])
            q, r, permutation = scipy.linalg.qr(system, mode='economic', pivoting=True)
            diagonal = np.abs(np.diag(r))
            rank = int(np.sum(diagonal > RANK_TOLERANCE * diagonal[0]))
            if rank < n_columns:
                raise RankDeficientError(rank, n_columns)
            self._q, self._r, self._permutation = q, r, permutation
        elif method == 'normal':
            gram = self.basis.conj().T @ self.basis
            if self.regularization == 0:
                eigenvalues = scipy.linalg.eigvalsh(gram)
                rank = int(np.sum(eigenvalues > RANK_TOLERANCE * eigenvalues[-1]))
                if rank < n_columns:
                    raise RankDeficientError(rank, n_columns)
            gram = gram + self.regularization * np.eye(n_columns)
            try:
                self._cholesky = scipy.linalg.cho_factor(gram)
            except scipy.linalg.LinAlgError:
                raise RankDeficientError(n_columns - 1, n_columns)
        else:
            raise ValidationError(f"ls method must be 'qr' or 'normal', got {method!r}")

    def solve(self, h):
        """Project one channel vector (N,) or a block of channels (N, k), returns (coefficients, residual norms)"""
        h = np.asarray(h, dtype=np.complex128)
        if h.shape[0] != self.basis.shape[0]:
            raise ValidationError(f'channel has {h.shape[0]} elements, basis has {self.basis.shape[0]} rows')
        if self.method == 'qr':
            n_rows = self.basis.shape[0]
            # the augmented rows of the right-hand side are zero
            rhs = self._q[:n_rows].conj().T @ h
            solution = np.empty_like(rhs)
            solution[self._permutation] = scipy.linalg.solve_triangular(self._r, rhs)
        else:
            solution = scipy.linalg.cho_solve(self._cholesky, self.basis.conj().T @ h)
        residual = np.linalg.norm(self.basis @ solution - h, axis=0)
        return solution, residual

    def pseudo_inverse(self):
        """n x N matrix P with solve(h)[0] == P @ h"""
        if self.method == 'qr':
            n_rows, n_columns = self.basis.shape
            pinv = np.empty((n_columns, n_rows), dtype=np.complex128)
            pinv[self._permutation] = scipy.linalg.solve_triangular(self._r, self._q[:n_rows].conj().T)
            return pinv
        return scipy.linalg.cho_solve(self._cholesky, self.basis.conj().T)


def ls_project(basis, h, regularization=0.0, method='qr'):
    """Least-squares Fourier coefficients of a spatial channel, returns (coefficients, residual norm)"""
    return LeastSquaresProjector(basis, regularization, method).solve(h)


def visible_kernel_mass(projector, geom):
    """Integral over the visible disk |k| <= 1 of |p_m . a(k)|^2 for every row p_m of the LS pseudo-inverse

    a(k) = exp(j 2 pi k . x) is the plane-wave response of the array, so a channel with a power density S(k) that
    is flat on the disk gives E|h~_m|^2 = S * mass_m. The integral only depends on element displacements:
    mass_m = sum over displacements D of J(D) R_m(D), with J(r) = J1(2 pi r) / r the Fourier transform of the disk
    and R_m the autocorrelation of p_m laid out on the element lattice.

    :param projector: LeastSquaresProjector built on basis_matrix(geom, grid)
    :param geom: ArrayGeometry the basis was built for
    :return: array of n kernel masses
    """
    n_x, n_y = geom.shape
    rows = projector.pseudo_inverse().reshape(-1, n_x, n_y)
    shift_x = np.arange(1 - n_x, n_x) * geom.spacing
    shift_y = np.arange(1 - n_y, n_y) * geom.spacing
    radius = np.hypot(shift_x[:, None], shift_y[None, :])
    with np.errstate(divide='ignore', invalid='ignore'):
        disk = np.where(radius > 0, special.j1(2 * np.pi * radius) / radius, np.pi)
    mass = np.empty(rows.shape[0])
    for chunk in chunk_indices(rows.shape[0], KERNEL_CHUNK):
        block = rows[chunk]
        autocorrelation = signal.fftconvolve(block, block[:, ::-1, ::-1].conj(), mode='full', axes=(1, 2))
        mass[chunk] = np.real(np.tensordot(autocorrelation, disk, axes=([1, 2], [0, 1])))
    return mass


def _block_statistics(indices, projector, geom, pattern, paths, seed):
    """Sum of |h~|^2 and of residual norms over one block of realizations"""
    block = multipath_block(geom, pattern, paths, seed, indices).T
    coefficients, residual = projector.solve(block)
    return np.sum(np.abs(coefficients) ** 2, axis=1), float(np.sum(residual))


def estimate_coupling(geom, grid, pat, cfg=None):
    """EMCC estimate of the coupling coefficients of grid

    The mean power v_hat(m) of every projected coefficient is divided by the variance factor and, with
    ``normalize_kernel``, by the visible-disk mass of the LS kernel of index m over the cell area 1 / (len_x len_y).
    The LS kernel is a lobe around the anchor whose visible mass differs from the cell area: plane waves between lattice
    points leak into neighbouring indices and the residual, and the unnormalized v_hat falls below the cell integral.

    :param geom: ArrayGeometry of the simulated array
    :param grid: WavenumberGrid of the same aperture
    :param pat: RadiationPattern of the elements
    :param cfg: EmccConfig
    :return: EmccResult
    """
    cfg = cfg or EmccConfig()
    pat = RadiationPattern.parse(pat)
    projector = LeastSquaresProjector(basis_matrix(geom, grid), cfg.ls_regularization, cfg.ls_method)
    logger.info(f'EMCC on {grid.aperture.label}, d={geom.spacing:g}: {geom.count} elements, {len(grid)} indices, '
                f'{cfg.realizations} realizations of {cfg.paths} paths')
    blocks = parallel_map(lambda indices: _block_statistics(indices, projector, geom, pat, cfg.paths, cfg.seed),
                          chunk_indices(cfg.realizations, CHUNK_SIZE), n_jobs=cfg.n_jobs)
    power = np.zeros(len(grid))
    residual = 0.0
    for block_power, block_residual in blocks:
        power += block_power
        residual += block_residual
    mean_power = power / cfg.realizations

    scale = np.full(len(grid), float(cfg.variance_factor))
    if cfg.normalize_kernel:
        mass = visible_kernel_mass(projector, geom)
        scale *= mass * grid.aperture.area
        logger.debug(f'kernel normalization between {scale.min():.4f} and {scale.max():.4f}')

    # 2 I v_hat / v follows chi-square with 2 I degrees of freedom for complex Gaussian coefficients
    dof = 2 * cfg.realizations
    lower = dof * mean_power / stats.chi2.ppf(0.5 + CONFIDENCE / 2, dof)
    upper = dof * mean_power / stats.chi2.ppf(0.5 - CONFIDENCE / 2, dof)
    half_width = (upper - lower) / 2 / scale

    spectrum = CouplingSpectrum(grid, mean_power / scale,
                                {'pattern': pat.spec, 'method': 'emcc', 'spacing': geom.spacing})
    logger.info(f'EMCC total {spectrum.total:.6f}, mean residual {residual / cfg.realizations:.3e}')
    return EmccResult(spectrum, half_width, residual / cfg.realizations, cfg)


def compare_with_reference(result, reference):
    """Per-index table of estimate, quadrature reference, relative error and interior flag"""
    if result.grid != reference.grid:
        raise ApertureMismatchError(result.grid.aperture.label, reference.grid.aperture.label)
    estimate = result.spectrum.values
    with np.errstate(divide='ignore', invalid='ignore'):
        relative = np.where(reference.values > 0, np.abs(estimate - reference.values) / reference.values, np.nan)
    return pd.DataFrame({'m_x': result.grid.indices[:, 0], 'm_y': result.grid.indices[:, 1],
                         'estimate': estimate, 'reference': reference.values, 'rel_error': relative,
                         'ci_half_width': result.ci_half_width, 'interior': result.grid.interior})
