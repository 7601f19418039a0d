# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import math
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from wavedof.exceptions import ApertureMismatchError, DataIOError, ValidationError
from wavedof.grid import Aperture
from wavedof.pattern import RadiationPattern, gain_angular, AngleDensity
from wavedof.utilities import child_generators, chunk_indices, complex_normal, ensure_parent, make_generator, \
    parallel_map
"""Random channel synthesis: planar array geometry, wavenumber-to-spatial transform matrices, separable
wavenumber-domain Rayleigh channels and directivity-weighted multipath channels
"""

logger = logging.getLogger(__name__)

MAX_SPACING = 0.5
# slack on floor(len/d) so 10/0.1 gives 100 and not 99
COUNT_SLACK = 1e-9

SPATIAL = 'spatial'
WAVENUMBER = 'wavenumber'
WHITE = 'white'
MULTIPATH = 'multipath'
ENSEMBLE_KINDS = (SPATIAL, WAVENUMBER, WHITE, MULTIPATH)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array filling an aperture, element spacing d in wavelengths, 0 < d <= 0.5

    Elements sit on a lattice centred on the aperture centre in the z = 0 plane. Rows of ``positions`` follow the
    (x, y) lexicographic order of the element indices.
    """
    aperture: Aperture
    spacing: float

    def __post_init__(self):
        object.__setattr__(self, 'aperture', Aperture.parse(self.aperture))
        try:
            spacing = float(self.spacing)
        except (TypeError, ValueError):
            raise ValidationError(f'element spacing must be a number, got {self.spacing!r}')
        if not (0 < spacing <= MAX_SPACING + 1e-12):
            raise ValidationError(f'element spacing must satisfy 0 < d <= {MAX_SPACING} wavelengths, got {spacing}')
        object.__setattr__(self, 'spacing', spacing)

    @property
    def shape(self):
        return (math.floor(self.aperture.len_x / self.spacing + COUNT_SLACK) + 1,
                math.floor(self.aperture.len_y / self.spacing + COUNT_SLACK) + 1)

    @property
    def count(self):
        n_x, n_y = self.shape
        return n_x * n_y

    @property
    def positions(self):
        n_x, n_y = self.shape
        x = (np.arange(n_x) - (n_x - 1) / 2) * self.spacing
        y = (np.arange(n_y) - (n_y - 1) / 2) * self.spacing
        grid_x, grid_y = np.meshgrid(x, y, indexing='ij')
        return np.column_stack([grid_x.ravel(), grid_y.ravel()])


@dataclass
class ChannelEnsemble:
    """Stack of channel realizations, item i was drawn from child stream i of the seed

    :param realizations: array of shape (I, rows, cols) for matrices or (I, N) for channel vectors
    :param seed: seed the ensemble was drawn with
    :param producer: name of the generating operation
    :param kind: 'spatial', 'wavenumber', 'white' or 'multipath'
    """
    realizations: np.ndarray
    seed: int
    producer: str
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValidationError(f'unknown ensemble kind {self.kind!r}')
        self.realizations = np.asarray(self.realizations, dtype=np.complex128)

    def __len__(self):
        return self.realizations.shape[0]

    def stack(self):
        return self.realizations

    def save(self, path):
        """Write the realizations as a little-endian complex128 C-ordered .npy file"""
        ensure_parent(path)
        try:
            np.save(path, np.ascontiguousarray(self.realizations, dtype='<c16'), allow_pickle=False)
        except OSError as error:
            raise DataIOError(path, error.strerror)
        return path


def transform_matrix(geom, grid):
    """N x n matrix with entries exp(-j 2 pi (kx x + ky y)) / sqrt(N), (kx, ky) the anchor of each grid index"""
    if geom.aperture != grid.aperture:
        raise ApertureMismatchError(geom.aperture.label, grid.aperture.label)
    phase = geom.positions @ grid.anchors.T
    return np.exp(-2j * np.pi * phase) / math.sqrt(geom.count)


def compress_transform(phi):
    """Factor S V^H of the thin SVD phi = U S V^H

    U has orthonormal columns, so singular values and Gram matrices of products phi_R A phi_T^H can be computed
    from S_R V_R^H A V_T S_T in n x n coordinates.
    """
    _, singular_values, vh = scipy.linalg.svd(phi, full_matrices=False)
    return singular_values[:, None] * vh


def _sigma(spectrum):
    values = spectrum.values if hasattr(spectrum, 'values') else np.asarray(spectrum, dtype=float)
    return np.sqrt(np.asarray(values, dtype=float))


def draw_wavenumber_channel(sig_t, sig_r, seed, realizations=1):
    """Separable wavenumber-domain channels H_a = diag(sigma_R) H_w diag(sigma_T), H_w i.i.d. CN(0, 1)

    :param sig_t: transmit CouplingSpectrum (or array of sigma^2)
    :param sig_r: receive CouplingSpectrum (or array of sigma^2)
    :param seed: seed, realization i uses child stream i
    :param realizations: number of draws
    :return: ChannelEnsemble of kind 'wavenumber', shape (I, n_R, n_T)
    """
    if realizations < 1:
        raise ValidationError(f'realizations must be >= 1, got {realizations}')
    return ChannelEnsemble(wavenumber_block(sig_t, sig_r, seed, range(realizations)), seed,
                           'draw_wavenumber_channel', WAVENUMBER)


def wavenumber_block(sig_t, sig_r, seed, indices):
    """Wavenumber channels of the given realization indices, shape (len(indices), n_R, n_T)"""
    sigma_t, sigma_r = _sigma(sig_t), _sigma(sig_r)
    shape = (len(sigma_r), len(sigma_t))
    draws = np.stack([complex_normal(rng, shape) for rng in child_generators(seed, indices)])
    return sigma_r[None, :, None] * draws * sigma_t[None, None, :]


def assemble_spatial_channel(ha, phi_t, phi_r, n_tx, n_rx):
    """Spatial channel sqrt(N_T N_R) phi_R H_a phi_T^H for one matrix or a stack of matrices"""
    ha = np.asarray(ha)
    if phi_t.shape[0] != n_tx or phi_r.shape[0] != n_rx:
        raise ValidationError(f'transform matrices have {phi_r.shape[0]} x {phi_t.shape[0]} elements, expected '
                              f'{n_rx} x {n_tx}')
    if ha.shape[-2:] != (phi_r.shape[1], phi_t.shape[1]):
        raise ValidationError(f'wavenumber channel of shape {ha.shape[-2:]} does not match transforms '
                              f'({phi_r.shape[1]}, {phi_t.shape[1]})')
    return math.sqrt(n_tx * n_rx) * (phi_r @ ha @ phi_t.conj().T)


def sample_multipath(count, seed):
    """Directions of count paths drawn from the isotropic half-space density

    :param count: number of paths, >= 1
    :param seed: integer seed or numpy Generator
    :return: (theta, phi) arrays in radians
    """
    if count < 1:
        raise ValidationError(f'number of multipaths must be >= 1, got {count}')
    rng = make_generator(seed)
    theta = AngleDensity.theta_from_uniform(rng.random(count))
    phi = 2 * np.pi * rng.random(count)
    return theta, phi


def multipath_spatial_channel(geom, pat, paths, seed, directions=None):
    """Per-element channel h = 1/sqrt(S) sum_s sqrt(G_s) exp(j beta_s) exp(j 2 pi (kx_s x + ky_s y))

    Every path carries an independent uniform phase beta_s drawn after the directions.

    :param geom: ArrayGeometry
    :param pat: RadiationPattern
    :param paths: number of paths S
    :param seed: integer seed or numpy Generator
    :param directions: optional (theta, phi) arrays overriding the sampled directions
    :return: complex vector of length N
    """
    pat = RadiationPattern.parse(pat)
    rng = make_generator(seed)
    if directions is None:
        theta, phi = sample_multipath(paths, rng)
    else:
        theta, phi = (np.atleast_1d(np.asarray(item, dtype=float)) for item in directions)
        if theta.shape != phi.shape or len(theta) != paths:
            raise ValidationError(f'expected {paths} directions, got {theta.shape} and {phi.shape}')
    phases = np.exp(2j * np.pi * rng.random(len(theta)))
    amplitude = np.sqrt(gain_angular(pat, theta, phi)) * phases
    wavevectors = np.column_stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi)])
    steering = np.exp(2j * np.pi * (geom.positions @ wavevectors.T))
    return steering @ amplitude / math.sqrt(len(theta))


def multipath_block(geom, pat, paths, seed, indices):
    """Multipath channels of the given realization indices, row k is drawn from child stream indices[k]"""
    return np.stack([multipath_spatial_channel(geom, pat, paths, rng) for rng in child_generators(seed, indices)])


def multipath_ensemble(geom, pat, paths, realizations, seed, n_jobs=1):
    """Ensemble of multipath channel vectors, realization i uses child stream i of the seed"""
    if realizations < 1:
        raise ValidationError(f'realizations must be >= 1, got {realizations}')
    pat = RadiationPattern.parse(pat)
    blocks = parallel_map(lambda indices: multipath_block(geom, pat, paths, seed, indices),
                          chunk_indices(realizations, 250), n_jobs=n_jobs)
    logger.debug(f'{realizations} multipath realizations with {paths} paths on {geom.count} elements')
    return ChannelEnsemble(np.concatenate(blocks), seed, 'multipath_ensemble', MULTIPATH,
                           {'paths': paths, 'pattern': pat.spec, 'spacing': geom.spacing})
