# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import math
import logging
import warnings
from functools import partial

import numpy as np
import pandas as pd
from scipy import integrate, special

from wavedof.exceptions import QuadratureError, ValidationError
from wavedof.grid import Aperture, WavenumberGrid, build_grid
from wavedof.pattern import COS_POWER, HYPOTHETICAL, TABULATED, RadiationPattern, wavenumber_gain_function
from wavedof.utilities import parallel_map, read_table, write_table
"""Directivity-aware coupling coefficients

For isotropic half-space scattering the coupling coefficient of wavenumber cell (m_x, m_y) is

    sigma^2(m_x, m_y) = 1/(2 pi) * integral over the cell of G(kx, ky) / sqrt(1 - kx^2 - ky^2) dkx dky

with the cell intersected with the unit disk. For G = cos^m(theta) the integrand is (1 - k^2)^((m-1)/2) and the
inner integral along ky has a closed form in terms of the regularized incomplete beta function, so only the outer
integral is done numerically. Other patterns substitute ky = sqrt(1 - kx^2) sin(psi), which cancels the square root
singularity on the rim.
"""

logger = logging.getLogger(__name__)

GAUSS_LEGENDRE_NODES = 10


class CouplingSpectrum:
    def __init__(self, grid, values, meta=None):
        """Coupling coefficients sigma^2 aligned with the indices of a wavenumber grid

        :param grid: WavenumberGrid
        :param values: non-negative finite values, one per grid index
        :param meta: dictionary describing how the values were obtained (pattern, method, tol, ...)
        """
        values = np.asarray(values, dtype=float)
        if values.shape != (len(grid),):
            raise ValidationError(f'{values.shape[0] if values.ndim else 0} values for a grid of {len(grid)} indices')
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValidationError('coupling coefficients must be finite and non-negative')
        self.grid = grid
        self.values = values
        self.meta = dict(meta or {})

    def __len__(self):
        return len(self.values)

    @property
    def aperture(self):
        return self.grid.aperture

    @property
    def total(self):
        return math.fsum(self.values)

    @property
    def sigma(self):
        """Positive square roots of the coefficients"""
        return np.sqrt(self.values)

    def value_at(self, index):
        return float(self.values[self.grid.position(index)])

    def scaled(self, factor):
        if not factor > 0:
            raise ValidationError(f'scale factor must be positive, got {factor}')
        return CouplingSpectrum(self.grid, self.values * factor, self.meta)

    def to_frame(self):
        anchors = self.grid.anchors
        return pd.DataFrame({'m_x': self.grid.indices[:, 0], 'm_y': self.grid.indices[:, 1],
                             'kx': anchors[:, 0], 'ky': anchors[:, 1], 'clipped': self.grid.clipped,
                             'sigma_sq': self.values})

    def metadata(self):
        return {'aperture': self.aperture.label, 'n_indices': len(self), 'total': self.total, **self.meta}

    def write(self, path, fmt='csv', metadata=None):
        return write_table(self.to_frame(), path, fmt=fmt, metadata={**self.metadata(), **(metadata or {})})

    def __repr__(self):
        return f'CouplingSpectrum({self.aperture.label}, n={len(self)}, total={self.total:.6g})'


def read_spectrum(path):
    """Load a spectrum written by CouplingSpectrum.write (CSV or JSON)"""
    frame, metadata = read_table(path)
    if 'aperture' not in metadata:
        raise ValidationError(f'{path}: spectrum file has no aperture metadata')
    grid = build_grid(Aperture.parse(metadata['aperture']))
    indices = frame[['m_x', 'm_y']].to_numpy(dtype=np.int64)
    if not np.array_equal(indices, grid.indices):
        raise ValidationError(f'{path}: rows do not match the {grid.aperture.label} wavenumber grid')
    meta = {key: value for key, value in metadata.items() if key not in ('aperture', 'n_indices', 'total')}
    return CouplingSpectrum(grid, frame['sigma_sq'].to_numpy(dtype=float), meta)


def _quad(function, a, b, points, tol, index):
    """Adaptive Gauss-Kronrod with integration warnings turned into QuadratureError"""
    inner = sorted({float(p) for p in points if a < p < b})
    with warnings.catch_warnings():
        warnings.simplefilter('error', integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(function, a, b, points=inner or None, epsabs=tol, epsrel=0.0,
                                      limit=200 + 4 * len(inner))
        except integrate.IntegrationWarning as warning:
            raise QuadratureError(index, str(warning).strip())
    return value


def _x_range(cell):
    """Part of [x_lo, x_hi] where the vertical chord of the cell meets the unit disk"""
    x_lo, x_hi, y_lo, y_hi = cell
    nearest = max(y_lo, -y_hi, 0.0)
    if nearest >= 1.0:
        return None
    half_width = math.sqrt(1.0 - nearest * nearest)
    a, b = max(x_lo, -half_width), min(x_hi, half_width)
    return (a, b) if b > a else None


def _rim_crossings(cell):
    """x positions where the horizontal cell edges meet the unit circle"""
    points = []
    for y in cell[2:]:
        if abs(y) < 1.0:
            root = math.sqrt(1.0 - y * y)
            points.extend([-root, root])
    return points


def _cos_power_cell(cell, exponent, tol, index):
    support = _x_range(cell)
    if support is None:
        return 0.0
    y_lo, y_hi = cell[2], cell[3]
    alpha = (exponent - 1.0) / 2.0
    # integral of (1 - t^2)^alpha from 0 to u is sign(u) B(1/2, alpha+1) I_{u^2}(1/2, alpha+1) / 2
    scale = 0.5 * special.beta(0.5, alpha + 1.0)

    def primitive(u):
        return math.copysign(scale * special.betainc(0.5, alpha + 1.0, u * u), u)

    def chord(x):
        s_squared = 1.0 - x * x
        if s_squared <= 0.0:
            return 0.0
        s = math.sqrt(s_squared)
        upper = min(y_hi / s, 1.0)
        lower = max(y_lo / s, -1.0)
        if upper <= lower:
            return 0.0
        return s ** exponent * (primitive(upper) - primitive(lower))

    return _quad(chord, support[0], support[1], _rim_crossings(cell), tol * 2 * math.pi, index) / (2 * math.pi)


def _table_breakpoints(pattern):
    """Sines of the theta nodes and (cos, tan) of the phi nodes of a tabulated pattern"""
    theta = np.radians(pattern.theta_deg[(pattern.theta_deg > 0) & (pattern.theta_deg < 90)])
    phi = np.radians(np.unique(np.mod(pattern.phi_deg, 360.0)))
    return np.sin(theta), np.cos(phi), np.tan(phi)


def _psi_breakpoints(x, s, radii, cos_phi, tan_phi, lo, hi):
    """Angles psi in (lo, hi) where y = s sin(psi) crosses a theta or phi line of the table"""
    sines = []
    inside = radii * radii > x * x
    sines.extend(np.sqrt(radii[inside] ** 2 - x * x) / s)
    sines.extend(-np.sqrt(radii[inside] ** 2 - x * x) / s)
    if x != 0.0:
        rays = (np.abs(cos_phi) > 1e-12) & (cos_phi * x > 0)
        sines.extend(x * tan_phi[rays] / s)
    sines = np.asarray(sines, dtype=float)
    psi = np.arcsin(sines[np.abs(sines) < 1.0])
    return np.unique(psi[(psi > lo) & (psi < hi)])


def _table_x_breakpoints(cell, radii, cos_phi, tan_phi):
    """x positions where a table line crosses a horizontal cell edge or turns vertical"""
    points = list(radii) + list(-radii) + [0.0]
    for y in cell[2:]:
        inside = radii * radii > y * y
        root = np.sqrt(radii[inside] ** 2 - y * y)
        points.extend(root)
        points.extend(-root)
        rays = (np.abs(tan_phi) > 1e-12) & (np.abs(cos_phi) > 1e-12)
        x = y / tan_phi[rays]
        points.extend(x[cos_phi[rays] * x > 0])
    return points


def _general_cell(cell, pattern, tol, index):
    support = _x_range(cell)
    if support is None:
        return 0.0
    y_lo, y_hi = cell[2], cell[3]
    gain = wavenumber_gain_function(pattern)
    points = _rim_crossings(cell)

    if pattern.kind == TABULATED:
        radii, cos_phi, tan_phi = _table_breakpoints(pattern)
        points += _table_x_breakpoints(cell, radii, cos_phi, tan_phi)
        nodes, weights = special.roots_legendre(GAUSS_LEGENDRE_NODES)

        def inner(x, s, lo, hi):
            edges = np.concatenate([[lo], _psi_breakpoints(x, s, radii, cos_phi, tan_phi, lo, hi), [hi]])
            half = np.diff(edges)[:, None] / 2
            psi = (edges[:-1, None] + edges[1:, None]) / 2 + half * nodes[None, :]
            values = gain(np.full(psi.shape, x), s * np.sin(psi))
            return float(np.sum(half * weights[None, :] * values))
    else:
        def inner(x, s, lo, hi):
            return _quad(lambda psi: float(gain(x, s * math.sin(psi))), lo, hi, (), tol * 0.1, index)

    def outer(x):
        s_squared = 1.0 - x * x
        if s_squared <= 0.0:
            return 0.0
        s = math.sqrt(s_squared)
        lo = math.asin(max(min(y_lo / s, 1.0), -1.0))
        hi = math.asin(max(min(y_hi / s, 1.0), -1.0))
        if hi <= lo:
            return 0.0
        return inner(x, s, lo, hi)

    return _quad(outer, support[0], support[1], points, tol * 2 * math.pi, index) / (2 * math.pi)


def _evaluate(function, grid, n_jobs):
    cells = [(tuple(grid.cells[row]), tuple(grid.indices[row])) for row in range(len(grid))]
    return np.array(parallel_map(lambda item: function(item[0], index=item[1]), cells, n_jobs=n_jobs))


def _check_tolerance(tol):
    if not (tol > 0 and math.isfinite(tol)):
        raise ValidationError(f'quadrature tolerance must be positive, got {tol}')


def coupling_cos_power(grid, m, tol=1e-9, n_jobs=1):
    """Coupling coefficients of a cos^m(theta) element

    :param grid: WavenumberGrid
    :param m: exponent, m >= 0 (m = 0 is the hypothetical half-space element)
    :param tol: absolute accuracy of every coefficient
    :param n_jobs: joblib workers for the per-cell quadratures
    :return: CouplingSpectrum
    """
    _check_tolerance(tol)
    if not (m >= 0 and math.isfinite(m)):
        raise ValidationError(f'cos_power exponent must be >= 0, got {m}')
    logger.debug(f'cos^{m:g} coupling on {grid.aperture.label} ({len(grid)} cells, tol {tol:g})')
    values = _evaluate(partial(_cos_power_cell, exponent=float(m), tol=tol), grid, n_jobs)
    return CouplingSpectrum(grid, values, {'pattern': f'cos:{m:g}', 'method': 'closed_form', 'tol': tol})


def coupling_general(grid, pattern, tol=1e-9, n_jobs=1):
    """Coupling coefficients of an arbitrary pattern by two-dimensional quadrature

    Tabulated patterns are integrated piecewise with Gauss-Legendre rules between the crossings of the
    interpolation grid, analytic ones with nested adaptive quadrature.

    :param grid: WavenumberGrid
    :param pattern: RadiationPattern
    :param tol: absolute accuracy target of every coefficient
    :param n_jobs: joblib workers for the per-cell quadratures
    :return: CouplingSpectrum
    """
    _check_tolerance(tol)
    pattern = RadiationPattern.parse(pattern)
    logger.debug(f'{pattern.spec} coupling on {grid.aperture.label} ({len(grid)} cells, tol {tol:g})')
    values = _evaluate(partial(_general_cell, pattern=pattern, tol=tol), grid, n_jobs)
    return CouplingSpectrum(grid, values, {'pattern': pattern.spec, 'method': 'general', 'tol': tol})


def compute_coupling(grid, pattern, tol=1e-9, n_jobs=1):
    """Closed form for cos^m and hypothetical elements, general quadrature for tabulated patterns"""
    if not isinstance(grid, WavenumberGrid):
        grid = build_grid(grid)
    pattern = RadiationPattern.parse(pattern)
    if pattern.kind == COS_POWER:
        spectrum = coupling_cos_power(grid, pattern.exponent, tol=tol, n_jobs=n_jobs)
    elif pattern.kind == HYPOTHETICAL:
        spectrum = coupling_cos_power(grid, 0.0, tol=tol, n_jobs=n_jobs)
        spectrum.meta['pattern'] = HYPOTHETICAL
    else:
        spectrum = coupling_general(grid, pattern, tol=tol, n_jobs=n_jobs)
    logger.info(f'Coupling {pattern.spec} on {grid.aperture.label}: {len(grid)} cells, total {spectrum.total:.6f}')
    return spectrum
