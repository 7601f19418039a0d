# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import os
import logging

import numpy as np
import pandas as pd
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator

from wavedof.exceptions import DataIOError, PatternCoverageError, PatternDomainError, PatternFormatError, \
    ValidationError
from wavedof.utilities import ensure_parent
"""Element power radiation patterns over the upper hemisphere (0 <= theta <= pi/2), either analytic (cos^m, the
hypothetical isotropic half-space element) or tabulated on a regular (theta, phi) grid read from CSV.
"""

logger = logging.getLogger(__name__)

COS_POWER = 'cos_power'
HYPOTHETICAL = 'hypothetical'
TABULATED = 'tabulated'

HALF_PI = np.pi / 2
# tolerance on the hemisphere edge and the unit circle for floating point inputs
EDGE_TOL = 1e-12
# floor used when writing zero gains in dB
DB_FLOOR = -300.0
# relative agreement required between the phi = 360 and phi = 0 columns
WRAP_RTOL = 1e-6


class RadiationPattern:
    def __init__(self, kind, exponent=None, theta_deg=None, phi_deg=None, gains=None, source=None):
        """Power radiation pattern of one array element, linear gains without renormalization

        Use the factories ``cos_power``, ``hypothetical``, ``tabulated`` or ``parse`` instead of calling this directly.

        :param kind: 'cos_power', 'hypothetical' or 'tabulated'
        :param exponent: m of cos^m(theta) for cos_power patterns
        :param theta_deg: sorted theta nodes in degrees, from 0 to 90 (tabulated)
        :param phi_deg: sorted phi nodes in degrees, from 0 to 360 inclusive (tabulated)
        :param gains: (len(theta_deg), len(phi_deg)) array of linear gains (tabulated)
        :param source: file the table was read from, if any
        """
        self.kind = kind
        self.exponent = exponent
        self.source = source
        self.theta_deg = theta_deg
        self.phi_deg = phi_deg
        self.gains = gains
        self._interpolator = None
        if kind == TABULATED:
            self._interpolator = RegularGridInterpolator((theta_deg, phi_deg), gains, method='linear',
                                                         bounds_error=False, fill_value=None)

    @classmethod
    def cos_power(cls, exponent):
        exponent = float(exponent)
        if not np.isfinite(exponent) or exponent < 0:
            raise ValidationError(f'cos_power exponent must be >= 0, got {exponent}')
        return cls(COS_POWER, exponent=exponent)

    @classmethod
    def hypothetical(cls):
        return cls(HYPOTHETICAL)

    @classmethod
    def tabulated(cls, theta_deg, phi_deg, gains, source=None):
        """Tabulated pattern on a complete regular grid; a missing phi = 360 column is copied from phi = 0"""
        theta_deg = np.asarray(theta_deg, dtype=float)
        phi_deg = np.asarray(phi_deg, dtype=float)
        gains = np.asarray(gains, dtype=float)
        if gains.shape != (len(theta_deg), len(phi_deg)):
            raise ValidationError(f'gain table shape {gains.shape} does not match a {len(theta_deg)} x '
                                  f'{len(phi_deg)} grid')
        if np.any(gains < 0) or not np.all(np.isfinite(gains)):
            raise ValidationError('tabulated gains must be finite and non-negative')
        if len(theta_deg) < 2 or theta_deg[0] != 0 or theta_deg[-1] != 90 or np.any(np.diff(theta_deg) <= 0):
            raise PatternCoverageError('theta nodes must increase from 0 to 90 degrees', path=source)
        if phi_deg[0] != 0 or np.any(np.diff(phi_deg) <= 0) or phi_deg[-1] > 360:
            raise PatternCoverageError('phi nodes must increase from 0 and stay below 360 degrees', path=source)
        if phi_deg[-1] != 360:
            phi_deg = np.append(phi_deg, 360.0)
            gains = np.column_stack([gains, gains[:, 0]])
        return cls(TABULATED, theta_deg=theta_deg, phi_deg=phi_deg, gains=gains, source=source)

    @classmethod
    def parse(cls, spec):
        """Parse 'cos:M', 'hypothetical' or 'file:PATH'"""
        if isinstance(spec, RadiationPattern):
            return spec
        text = str(spec).strip()
        if text.lower() == HYPOTHETICAL:
            return cls.hypothetical()
        head, _, tail = text.partition(':')
        if head.lower() == 'cos' and tail:
            try:
                exponent = float(tail)
            except ValueError:
                raise ValidationError(f'cos pattern needs a numeric exponent, got {text!r}')
            return cls.cos_power(exponent)
        if head.lower() == 'file' and tail:
            return load_pattern(tail)
        raise ValidationError(f'pattern must be cos:M, hypothetical or file:PATH, got {text!r}')

    @property
    def label(self):
        if self.kind == COS_POWER:
            return f'cos{self.exponent:g}'
        if self.kind == HYPOTHETICAL:
            return HYPOTHETICAL
        return os.path.splitext(os.path.basename(self.source))[0] if self.source else TABULATED

    @property
    def spec(self):
        """Canonical textual form, inverse of parse"""
        if self.kind == COS_POWER:
            return f'cos:{self.exponent:g}'
        if self.kind == HYPOTHETICAL:
            return HYPOTHETICAL
        return f'file:{self.source}' if self.source else TABULATED

    @property
    def is_phi_independent(self):
        if self.kind != TABULATED:
            return True
        return bool(np.allclose(self.gains, self.gains[:, :1]))

    def _table_gain(self, theta, phi):
        """Bilinear table lookup without domain checks, angles in radians"""
        theta_deg = np.clip(np.degrees(theta), 0.0, 90.0)
        phi_deg = np.mod(np.degrees(phi), 360.0)
        points = np.stack([np.broadcast_to(theta_deg, np.broadcast(theta_deg, phi_deg).shape),
                           np.broadcast_to(phi_deg, np.broadcast(theta_deg, phi_deg).shape)], axis=-1)
        return np.maximum(self._interpolator(points), 0.0)

    def __repr__(self):
        return f'RadiationPattern({self.spec!r})'


def gain_angular(pat, theta, phi):
    """Gain G(theta, phi) of a pattern

    :param pat: RadiationPattern
    :param theta: elevation from broadside in radians
    :param phi: azimuth in radians
    :return: gain array broadcast from theta and phi
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if pat.kind == TABULATED:
        if np.any(theta < -EDGE_TOL) or np.any(theta > HALF_PI + EDGE_TOL):
            raise PatternDomainError('tabulated patterns are defined for 0 <= theta <= pi/2 only')
        return pat._table_gain(theta, phi)
    above = (theta >= -EDGE_TOL) & (theta <= HALF_PI + EDGE_TOL)
    if pat.kind == HYPOTHETICAL:
        value = np.ones(np.broadcast(theta, phi).shape)
    else:
        value = np.broadcast_to(np.abs(np.cos(theta)) ** pat.exponent, np.broadcast(theta, phi).shape)
    return np.where(np.broadcast_to(above, value.shape), value, 0.0)


def wavenumber_gain_function(pat):
    """Vectorized G(kx, ky) without domain checks, used inside quadrature loops"""
    if pat.kind == COS_POWER:
        exponent = pat.exponent / 2

        def gain(kx, ky):
            return np.maximum(1.0 - kx * kx - ky * ky, 0.0) ** exponent
    elif pat.kind == HYPOTHETICAL:
        def gain(kx, ky):
            return np.ones(np.broadcast(kx, ky).shape)
    else:
        def gain(kx, ky):
            radius = np.minimum(np.hypot(kx, ky), 1.0)
            return pat._table_gain(np.arcsin(radius), np.arctan2(ky, kx))
    return gain


def gain_wavenumber(pat, kx, ky):
    """Gain in normalized wavenumber coordinates, theta = arcsin(r) and phi = atan2(ky, kx)

    For cos^m patterns this is (1 - kx^2 - ky^2)^(m/2).

    :param pat: RadiationPattern
    :param kx: normalized wavenumber along x
    :param ky: normalized wavenumber along y
    :return: gain array
    """
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    if np.any(kx * kx + ky * ky > 1 + EDGE_TOL):
        raise PatternDomainError('wavenumber outside the unit disk')
    return wavenumber_gain_function(pat)(kx, ky)


class AngleDensity:
    """Isotropic scattering over the upper half space, p(theta, phi) = sin(theta) / (2 pi)"""

    @staticmethod
    def pdf(theta, phi):
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        inside = (theta >= 0) & (theta <= HALF_PI) & (phi >= 0) & (phi <= 2 * np.pi)
        return np.where(inside, np.sin(theta) / (2 * np.pi), 0.0)

    @classmethod
    def total_probability(cls):
        value, _ = integrate.dblquad(lambda theta, phi: cls.pdf(theta, phi), 0.0, 2 * np.pi, 0.0, HALF_PI,
                                     epsabs=1e-12, epsrel=1e-12)
        return value

    @staticmethod
    def theta_from_uniform(u):
        """Inverse CDF of the elevation marginal, theta = arccos(1 - u) for u in [0, 1)"""
        return np.arccos(1.0 - np.asarray(u, dtype=float))


def _malformed(frame, columns):
    values = frame[columns].apply(pd.to_numeric, errors='coerce')
    bad = values.isna().any(axis=1) | ~np.isfinite(values.to_numpy(dtype=float)).all(axis=1)
    return values, bad


def load_pattern(path):
    """Read a tabulated pattern from CSV

    The file has a header ``theta_deg,phi_deg,gain`` (linear) or ``theta_deg,phi_deg,gain_db`` and one row per node of
    a complete regular grid with theta from 0 to 90 and phi from 0 to below 360 degrees. A phi = 360 column is
    optional and, when present, must repeat the phi = 0 column.

    :param path: CSV file
    :return: tabulated RadiationPattern
    """
    path = str(path)
    if not os.path.isfile(path):
        raise DataIOError(path, 'pattern file not found')
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True, encoding='utf-8')
    except pd.errors.EmptyDataError:
        raise PatternFormatError('file is empty', path=path)
    except pd.errors.ParserError as error:
        raise PatternFormatError(f'malformed CSV ({error})', path=path)
    except UnicodeDecodeError:
        raise PatternFormatError('file is not UTF-8 text', path=path)
    except OSError as error:
        raise DataIOError(path, error.strerror)

    frame.columns = [str(column).strip().lower() for column in frame.columns]
    if 'gain' in frame.columns:
        gain_column, in_db = 'gain', False
    elif 'gain_db' in frame.columns:
        gain_column, in_db = 'gain_db', True
    else:
        raise PatternFormatError('header must contain theta_deg, phi_deg and gain or gain_db', path=path)
    columns = ['theta_deg', 'phi_deg', gain_column]
    if any(column not in frame.columns for column in columns[:2]):
        raise PatternFormatError('header must contain theta_deg, phi_deg and gain or gain_db', path=path)
    if frame.empty:
        raise PatternCoverageError('no pattern rows', path=path)

    # data rows start on line 2 of the file
    line_numbers = frame.index.to_numpy() + 2
    values, bad = _malformed(frame, columns)
    if bad.any():
        raise PatternFormatError('malformed rows', path=path, lines=line_numbers[bad.to_numpy()])
    theta = values['theta_deg'].to_numpy(dtype=float)
    phi = values['phi_deg'].to_numpy(dtype=float)
    gain = values[gain_column].to_numpy(dtype=float)
    if in_db:
        gain = 10.0 ** (gain / 10.0)
    elif np.any(gain < 0):
        raise PatternFormatError('negative gains', path=path, lines=line_numbers[gain < 0])
    outside = (theta < 0) | (theta > 90) | (phi < 0) | (phi > 360)
    if np.any(outside):
        raise PatternFormatError('nodes outside the upper hemisphere', path=path, lines=line_numbers[outside])

    nodes = pd.DataFrame({'theta': theta, 'phi': phi, 'gain': gain, 'line': line_numbers})
    duplicated = nodes.duplicated(subset=['theta', 'phi'], keep=False).to_numpy()
    if duplicated.any():
        raise PatternFormatError('duplicate grid nodes', path=path, lines=line_numbers[duplicated])
    # 360 is the same azimuth as 0: a 360 column must repeat the 0 column, and stands in for it when absent
    if np.any(phi == 0):
        wrap = nodes[nodes['phi'] == 360]
        zero = nodes[nodes['phi'] == 0].set_index('theta')['gain']
        expected = zero.reindex(wrap['theta']).to_numpy()
        conflicting = np.isnan(expected) | ~np.isclose(wrap['gain'].to_numpy(), expected, rtol=WRAP_RTOL, atol=0.0)
        if conflicting.any():
            raise PatternFormatError('phi = 360 rows differ from the phi = 0 column', path=path,
                                     lines=wrap['line'].to_numpy()[conflicting])
        nodes = nodes[nodes['phi'] != 360]
    else:
        nodes.loc[nodes['phi'] == 360, 'phi'] = 0.0

    theta_nodes = np.unique(nodes['theta'].to_numpy())
    phi_nodes = np.unique(nodes['phi'].to_numpy())
    if theta_nodes[0] != 0 or theta_nodes[-1] != 90 or len(theta_nodes) < 2:
        raise PatternCoverageError('theta nodes must span 0 to 90 degrees', path=path)
    if phi_nodes[0] != 0:
        raise PatternCoverageError('phi nodes must start at 0 degrees', path=path)
    table = nodes.pivot(index='theta', columns='phi', values='gain')
    if table.isna().to_numpy().any():
        missing = int(table.isna().to_numpy().sum())
        raise PatternFormatError(f'irregular grid, {missing} of {table.size} (theta, phi) nodes missing', path=path)
    logger.info(f'Loaded pattern {path}: {len(theta_nodes)} theta x {len(phi_nodes)} phi nodes'
                f'{" (converted from dB)" if in_db else ""}')
    return RadiationPattern.tabulated(table.index.to_numpy(dtype=float), table.columns.to_numpy(dtype=float),
                                      table.to_numpy(dtype=float), source=path)


def write_pattern(pat, path, step_deg=None, db=False):
    """Tabulate a pattern into the CSV format read by load_pattern

    :param pat: RadiationPattern
    :param path: output CSV file
    :param step_deg: grid step in degrees; None keeps the nodes of a tabulated pattern and uses 1 degree otherwise
    :param db: write gain_db instead of linear gain
    :return: path that was written
    """
    if step_deg is None and pat.kind == TABULATED:
        theta_deg = pat.theta_deg
        phi_deg = pat.phi_deg[pat.phi_deg < 360]
    else:
        step = 1.0 if step_deg is None else float(step_deg)
        if step <= 0 or not np.isclose(90.0 / step, round(90.0 / step)) \
                or not np.isclose(360.0 / step, round(360.0 / step)):
            raise ValidationError(f'step_deg must divide 90 degrees, got {step_deg}')
        theta_deg = np.linspace(0.0, 90.0, int(round(90.0 / step)) + 1)
        phi_deg = np.linspace(0.0, 360.0, int(round(360.0 / step)) + 1)[:-1]
    theta_grid, phi_grid = np.meshgrid(theta_deg, phi_deg, indexing='ij')
    gain = gain_angular(pat, np.radians(theta_grid), np.radians(phi_grid)).ravel()
    frame = pd.DataFrame({'theta_deg': theta_grid.ravel(), 'phi_deg': phi_grid.ravel()})
    if db:
        frame['gain_db'] = np.maximum(10.0 * np.log10(np.maximum(gain, 1e-300)), DB_FLOOR)
    else:
        frame['gain'] = gain
    ensure_parent(path)
    try:
        frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    except OSError as error:
        raise DataIOError(path, error.strerror)
    return path
