# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import numpy as np
import pytest

from wavedof.exceptions import DataIOError, PatternCoverageError, PatternDomainError, PatternFormatError, \
    ValidationError
from wavedof.pattern import AngleDensity, RadiationPattern, gain_angular, gain_wavenumber, load_pattern, \
    write_pattern


def write_csv(path, rows, header='theta_deg,phi_deg,gain'):
    path.write_text('\n'.join([header] + [','.join(str(value) for value in row) for row in rows]) + '\n')
    return str(path)


def coarse_rows(gain=lambda theta, phi: 1.0, theta_nodes=(0, 45, 90), phi_nodes=(0, 90, 180, 270)):
    return [(theta, phi, gain(theta, phi)) for theta in theta_nodes for phi in phi_nodes]


def test_cos_power_gains():
    pattern = RadiationPattern.cos_power(2)
    assert gain_angular(pattern, np.pi / 3, 0.0) == pytest.approx(0.25)
    assert gain_angular(pattern, 0.0, 1.0) == pytest.approx(1.0)
    # below the horizon nothing is radiated
    assert gain_angular(pattern, 2.0, 0.0) == 0.0
    assert gain_angular(RadiationPattern.hypothetical(), 2.0, 0.0) == 0.0


def test_cos_zero_matches_hypothetical_in_hemisphere():
    theta = np.linspace(0, np.pi / 2, 7)
    phi = np.linspace(0, 2 * np.pi, 7)
    assert np.allclose(gain_angular(RadiationPattern.cos_power(0), theta, phi),
                       gain_angular(RadiationPattern.hypothetical(), theta, phi))


@pytest.mark.parametrize('exponent', [0, 1, 2, 3.5])
def test_gain_wavenumber_closed_form(exponent):
    kx = np.array([0.0, 0.3, -0.5, 0.6])
    ky = np.array([0.0, 0.4, 0.5, -0.8])
    # (0.6, -0.8) lies on the rim where rounding can leave 1 - k^2 slightly negative
    expected = np.maximum(1 - kx ** 2 - ky ** 2, 0.0) ** (exponent / 2)
    assert np.allclose(gain_wavenumber(RadiationPattern.cos_power(exponent), kx, ky), expected)


def test_gain_wavenumber_hypothetical():
    assert gain_wavenumber(RadiationPattern.hypothetical(), 0.3, 0.4) == pytest.approx(1.0)
    assert np.all(gain_wavenumber(RadiationPattern.hypothetical(), [0.0, 0.6], [1.0, -0.8]) == 1.0)


def test_gain_wavenumber_outside_disk():
    with pytest.raises(PatternDomainError):
        gain_wavenumber(RadiationPattern.cos_power(1), 0.9, 0.9)


def test_angle_density_normalized():
    assert AngleDensity.total_probability() == pytest.approx(1.0, abs=1e-9)
    assert AngleDensity.pdf(2.0, 0.0) == 0.0
    assert AngleDensity.theta_from_uniform(0.0) == pytest.approx(0.0)
    assert AngleDensity.theta_from_uniform(1.0) == pytest.approx(np.pi / 2)


@pytest.mark.parametrize('text', ['cos', 'cos:', 'cos:-1', 'cos:two', 'dipole', 'file:'])
def test_parse_rejects(text):
    with pytest.raises(ValidationError):
        RadiationPattern.parse(text)


def test_parse_and_spec():
    assert RadiationPattern.parse('COS:2').spec == 'cos:2'
    assert RadiationPattern.parse(' hypothetical ').kind == 'hypothetical'
    assert RadiationPattern.parse('cos:1.5').label == 'cos1.5'


def test_tabulated_reproduces_analytic(tmp_path):
    path = write_pattern(RadiationPattern.cos_power(1), str(tmp_path / 'cos1.csv'), step_deg=5)
    pattern = load_pattern(path)
    assert pattern.kind == 'tabulated'
    assert pattern.label == 'cos1'
    assert pattern.is_phi_independent
    theta = np.radians(np.arange(0, 91, 5.0))
    assert np.allclose(gain_angular(pattern, theta, 0.3), np.cos(theta), atol=1e-12)
    # between the nodes the bilinear interpolation error of cos stays below h^2/8
    theta = np.radians(np.arange(2.5, 90, 5.0))
    assert np.allclose(gain_angular(pattern, theta, 1.1), np.cos(theta), atol=1e-3)


def test_tabulated_in_db(tmp_path):
    path = write_pattern(RadiationPattern.cos_power(2), str(tmp_path / 'cos2_db.csv'), step_deg=10, db=True)
    pattern = load_pattern(path)
    assert gain_angular(pattern, np.pi / 3, 0.0) == pytest.approx(0.25, rel=1e-9)
    # zero gain at the horizon is written at the dB floor
    assert gain_angular(pattern, np.pi / 2, 0.0) == pytest.approx(0.0, abs=1e-29)


def test_tabulated_domain(tmp_path):
    pattern = load_pattern(write_csv(tmp_path / 'flat.csv', coarse_rows()))
    with pytest.raises(PatternDomainError):
        gain_angular(pattern, np.pi / 2 + 0.1, 0.0)
    # azimuth wraps around
    assert gain_angular(pattern, 0.5, -1.0) == pytest.approx(1.0)


def test_phi_360_column_matching_zero(tmp_path):
    rows = coarse_rows(lambda theta, phi: 1.0 + phi / 360 + theta / 90)
    rows += [(theta, 360, 1.0 + theta / 90) for theta in (0, 45, 90)]
    pattern = load_pattern(write_csv(tmp_path / 'wrap.csv', rows))
    assert pattern.phi_deg[-1] == 360
    assert np.allclose(pattern.gains[:, -1], pattern.gains[:, 0])
    assert not pattern.is_phi_independent


def test_phi_360_column_conflicting_with_zero(tmp_path):
    # rows 2..13 hold the 3 x 4 grid, the 360 rows follow on lines 14..16
    rows = coarse_rows() + [(0, 360, 1.0), (45, 360, 50.0), (90, 360, 9.0)]
    with pytest.raises(PatternFormatError) as error:
        load_pattern(write_csv(tmp_path / 'wrap.csv', rows))
    assert error.value.lines == [15, 16]
    assert not isinstance(error.value, PatternCoverageError)


def test_malformed_rows_report_lines(tmp_path):
    rows = coarse_rows()
    rows[1] = (0, 90, 'abc')
    rows[4] = (45, 0, '')
    with pytest.raises(PatternFormatError) as error:
        load_pattern(write_csv(tmp_path / 'bad.csv', rows))
    assert error.value.lines == [3, 6]
    assert 'lines 3, 6' in str(error.value)


def test_negative_gain(tmp_path):
    rows = coarse_rows()
    rows[2] = (0, 180, -0.5)
    with pytest.raises(PatternFormatError, match='negative'):
        load_pattern(write_csv(tmp_path / 'negative.csv', rows))


def test_duplicate_node(tmp_path):
    rows = coarse_rows() + [(45, 90, 1.0)]
    with pytest.raises(PatternFormatError, match='duplicate'):
        load_pattern(write_csv(tmp_path / 'duplicate.csv', rows))


def test_irregular_grid(tmp_path):
    rows = [row for row in coarse_rows() if row[:2] != (45, 180)]
    with pytest.raises(PatternFormatError, match='irregular') as error:
        load_pattern(write_csv(tmp_path / 'irregular.csv', rows))
    assert not isinstance(error.value, PatternCoverageError)


def test_coverage(tmp_path):
    rows = coarse_rows(theta_nodes=(0, 45, 80))
    with pytest.raises(PatternCoverageError):
        load_pattern(write_csv(tmp_path / 'partial.csv', rows))


def test_header_and_missing_file(tmp_path):
    with pytest.raises(PatternFormatError, match='header'):
        load_pattern(write_csv(tmp_path / 'header.csv', coarse_rows(), header='theta,phi,gain'))
    with pytest.raises(DataIOError):
        load_pattern(str(tmp_path / 'missing.csv'))
