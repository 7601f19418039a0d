# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import numpy as np
import pytest
from scipy import special

from wavedof.channel import ArrayGeometry
from wavedof.coupling import coupling_cos_power
from wavedof.emcc import EmccConfig, LeastSquaresProjector, basis_matrix, compare_with_reference, \
    estimate_coupling, ls_project, visible_kernel_mass
from wavedof.exceptions import ApertureMismatchError, IllPosedConfigurationError, RankDeficientError, \
    ValidationError
from wavedof.grid import build_grid
from wavedof.utilities import read_table


def test_basis_matrix():
    geometry, grid = ArrayGeometry('10x10', 0.5), build_grid('10x10')
    basis = basis_matrix(geometry, grid)
    assert basis.shape == (441, 317)
    origin = np.flatnonzero(np.all(geometry.positions == 0, axis=1))[0]
    assert np.allclose(basis[origin], 1.0)
    assert np.allclose(basis[:, grid.position((0, 0))], 1.0)
    assert np.allclose(basis[:, grid.position((3, -2))], np.conj(basis[:, grid.position((-3, 2))]))


def test_basis_matrix_checks():
    with pytest.raises(IllPosedConfigurationError):
        basis_matrix(ArrayGeometry('0.4x0.4', 0.5), build_grid('0.4x0.4'))
    with pytest.raises(ApertureMismatchError):
        basis_matrix(ArrayGeometry('2x2', 0.5), build_grid('3x3'))


@pytest.mark.parametrize('method', ['qr', 'normal'])
def test_least_squares_round_trip(method):
    rng = np.random.default_rng(4)
    grid = build_grid('2x2')
    basis = basis_matrix(ArrayGeometry('2x2', 0.4), grid)
    coefficients = rng.standard_normal(len(grid)) + 1j * rng.standard_normal(len(grid))
    estimate, residual = ls_project(basis, basis @ coefficients, method=method)
    assert np.allclose(estimate, coefficients, atol=1e-8)
    assert residual < 1e-8


def test_projector_handles_blocks():
    rng = np.random.default_rng(5)
    grid = build_grid('2x2')
    projector = LeastSquaresProjector(basis_matrix(ArrayGeometry('2x2', 0.4), grid))
    channels = rng.standard_normal((36, 3)) + 1j * rng.standard_normal((36, 3))
    block, residuals = projector.solve(channels)
    assert block.shape == (len(grid), 3)
    for column in range(3):
        single, residual = projector.solve(channels[:, column])
        assert np.allclose(block[:, column], single)
        assert residuals[column] == pytest.approx(residual)
    # residual is orthogonal to the basis
    expected, *_ = np.linalg.lstsq(projector.basis, channels, rcond=None)
    assert np.allclose(block, expected)


@pytest.mark.parametrize('method', ['qr', 'normal'])
def test_aliased_columns_are_rank_deficient(method):
    # at half-wavelength spacing the columns (2, 0) and (-2, 0) of a 2x2 aperture coincide
    basis = basis_matrix(ArrayGeometry('2x2', 0.5), build_grid('2x2'))
    with pytest.raises(RankDeficientError):
        ls_project(basis, basis[:, 0], method=method)
    coefficients, residual = ls_project(basis, basis[:, 0], regularization=1e-10, method=method)
    assert residual < 1e-6


@pytest.mark.parametrize('settings', [{'realizations': 1}, {'paths': 0}, {'variance_factor': 3},
                                      {'ls_method': 'svd'}, {'ls_regularization': -1.0}, {'seed': -2}])
def test_emcc_config_validation(settings):
    with pytest.raises(ValidationError):
        EmccConfig(**settings)


def test_estimate_small_array():
    geometry, grid = ArrayGeometry('1x1', 0.25), build_grid('1x1')
    config = EmccConfig(paths=20, realizations=400, seed=2)
    result = estimate_coupling(geometry, grid, 'cos:1', config)
    again = estimate_coupling(geometry, grid, 'cos:1', config)
    assert np.array_equal(result.spectrum.values, again.spectrum.values)
    assert len(result.spectrum) == len(grid)
    assert np.all(result.ci_half_width > 0)
    assert result.mean_residual >= 0
    assert result.spectrum.meta['method'] == 'emcc'
    halved = estimate_coupling(geometry, grid, 'cos:1', EmccConfig(paths=20, realizations=400, seed=2,
                                                                  variance_factor=2))
    assert np.allclose(halved.spectrum.values, result.spectrum.values / 2)
    assert np.allclose(halved.ci_half_width, result.ci_half_width / 2)


def test_estimate_independent_of_workers():
    geometry, grid = ArrayGeometry('1x1', 0.25), build_grid('1x1')
    serial = estimate_coupling(geometry, grid, 'hypothetical', EmccConfig(paths=5, realizations=600, seed=1))
    parallel = estimate_coupling(geometry, grid, 'hypothetical', EmccConfig(paths=5, realizations=600, seed=1,
                                                                           n_jobs=2))
    assert np.allclose(serial.spectrum.values, parallel.spectrum.values, rtol=1e-12, atol=0)


def test_compare_and_write(tmp_path):
    geometry, grid = ArrayGeometry('1x1', 0.25), build_grid('1x1')
    result = estimate_coupling(geometry, grid, 'cos:1', EmccConfig(paths=10, realizations=50))
    table = compare_with_reference(result, coupling_cos_power(grid, 1))
    assert list(table.columns) == ['m_x', 'm_y', 'estimate', 'reference', 'rel_error', 'ci_half_width',
                                   'interior']
    assert len(table) == len(grid)
    with pytest.raises(ApertureMismatchError):
        compare_with_reference(result, coupling_cos_power(build_grid('2x2'), 1))
    frame, metadata = read_table(result.write(str(tmp_path / 'emcc.csv')))
    assert 'ci_half_width' in frame.columns
    assert metadata['emcc']['paths'] == 10


def test_pseudo_inverse_matches_solve():
    rng = np.random.default_rng(6)
    basis = basis_matrix(ArrayGeometry('2x2', 0.4), build_grid('2x2'))
    channel = rng.standard_normal(36) + 1j * rng.standard_normal(36)
    pinv = LeastSquaresProjector(basis).pseudo_inverse()
    assert pinv.shape == (13, 36)
    assert np.allclose(pinv @ basis, np.eye(13), atol=1e-8)
    assert np.allclose(pinv @ channel, LeastSquaresProjector(basis).solve(channel)[0])
    assert np.allclose(LeastSquaresProjector(basis, method='normal').pseudo_inverse(), pinv, atol=1e-8)


def test_visible_kernel_mass_matches_polar_quadrature():
    geometry, grid = ArrayGeometry('1x1', 0.25), build_grid('1x1')
    projector = LeastSquaresProjector(basis_matrix(geometry, grid))
    nodes, weights = special.roots_legendre(60)
    radius = (nodes + 1) / 2
    angle = 2 * np.pi * np.arange(120) / 120
    kx = (radius[:, None] * np.cos(angle)[None, :]).ravel()
    ky = (radius[:, None] * np.sin(angle)[None, :]).ravel()
    weight = np.repeat(weights / 2 * radius, 120) * 2 * np.pi / 120
    steering = np.exp(2j * np.pi * (geometry.positions @ np.stack([kx, ky])))
    expected = np.abs(projector.pseudo_inverse() @ steering) ** 2 @ weight
    mass = visible_kernel_mass(projector, geometry)
    assert mass.shape == (len(grid),)
    assert np.allclose(mass, expected, rtol=1e-6)


def test_kernel_normalization_rescales_raw_estimate():
    geometry, grid = ArrayGeometry('1x1', 0.25), build_grid('1x1')
    settings = {'paths': 10, 'realizations': 200, 'seed': 3}
    raw = estimate_coupling(geometry, grid, 'cos:1', EmccConfig(normalize_kernel=False, **settings))
    normalized = estimate_coupling(geometry, grid, 'cos:1', EmccConfig(**settings))
    mass = visible_kernel_mass(LeastSquaresProjector(basis_matrix(geometry, grid), 1e-10), geometry)
    assert np.allclose(raw.spectrum.values / normalized.spectrum.values, mass * grid.aperture.area)
    assert np.allclose(raw.ci_half_width / normalized.ci_half_width, mass * grid.aperture.area)


@pytest.mark.slow
def test_emcc_matches_quadrature():
    geometry, grid = ArrayGeometry('4x4', 0.5), build_grid('4x4')
    reference = coupling_cos_power(grid, 1)
    result = estimate_coupling(geometry, grid, 'cos:1', EmccConfig(paths=200, realizations=5000, seed=0))
    cells = grid.interior
    assert cells.sum() == 32
    relative = np.abs(result.spectrum.values[cells] - reference.values[cells]) / reference.values[cells]
    assert np.all(relative <= 0.10)


@pytest.mark.slow
def test_emcc_seed_average_within_confidence():
    geometry, grid = ArrayGeometry('4x4', 0.5), build_grid('4x4')
    reference = coupling_cos_power(grid, 1).values
    cells = grid.interior
    runs = [estimate_coupling(geometry, grid, 'cos:1', EmccConfig(paths=200, realizations=5000, seed=seed))
            for seed in range(20)]
    average = np.mean([run.spectrum.values for run in runs], axis=0)
    # the mean of 20 independent runs narrows the half-width by sqrt(20)
    half_width = np.mean([run.ci_half_width for run in runs], axis=0) / np.sqrt(len(runs))
    assert np.all(np.abs(average[cells] - reference[cells]) <= 3 * half_width[cells])


@pytest.mark.slow
def test_emcc_error_shrinks_with_realizations():
    geometry, grid = ArrayGeometry('2x2', 0.4), build_grid('2x2')
    reference = coupling_cos_power(grid, 1).values
    cells = grid.interior

    def worst_error(realizations, seed):
        result = estimate_coupling(geometry, grid, 'cos:1', EmccConfig(paths=20, realizations=realizations,
                                                                      seed=seed))
        return np.max(np.abs(result.spectrum.values[cells] - reference[cells]) / reference[cells])

    errors = [np.median([worst_error(realizations, seed) for seed in range(5)])
              for realizations in (100, 1000, 10000)]
    assert errors[0] > errors[1] > errors[2]


@pytest.mark.slow
def test_emcc_hypothetical_bowl():
    geometry, grid = ArrayGeometry('4x4', 0.5), build_grid('4x4')
    result = estimate_coupling(geometry, grid, 'hypothetical', EmccConfig(paths=50, realizations=2000, seed=1))
    radius = np.hypot(grid.anchors[:, 0], grid.anchors[:, 1])
    values = result.spectrum.values
    assert values[grid.interior & (radius >= 0.7)].mean() > values[radius <= 0.3].mean()
