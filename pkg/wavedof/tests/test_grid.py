# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import math

import numpy as np
import pytest

from wavedof.exceptions import ValidationError
from wavedof.grid import Aperture, build_grid, eta_upper_bound
"""Tests of the wavenumber lattice"""


def test_build_grid_counts():
    assert len(build_grid(Aperture(10, 10))) == 317
    assert len(build_grid(Aperture(1, 1))) == 5
    assert set(build_grid('1x1')) == {(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)}


def test_origin_cell_of_10x10():
    grid = build_grid(Aperture(10, 10))
    row = grid.position((0, 0))
    assert np.allclose(grid.cells[row], [0.0, 0.1, 0.0, 0.1])
    assert not grid.clipped[row]


def test_indices_inside_disk_unique_and_sorted():
    grid = build_grid(Aperture(7.5, 4))
    anchors = grid.anchors
    assert np.all(np.sum(anchors ** 2, axis=1) <= 1 + 1e-12)
    as_tuples = [tuple(index) for index in grid.indices]
    assert as_tuples == sorted(as_tuples)
    assert len(set(as_tuples)) == len(as_tuples)


def test_cells_disjoint_and_clipping_flag():
    grid = build_grid(Aperture(5, 5))
    widths = grid.cells[:, 1] - grid.cells[:, 0]
    assert np.allclose(widths, 0.2)
    # lower corners on the lattice with pitch equal to the width
    assert np.allclose(grid.cells[:, 0] * 5, np.round(grid.cells[:, 0] * 5))
    far = np.abs(grid.cells[:, :2]).max(axis=1) ** 2 + np.abs(grid.cells[:, 2:]).max(axis=1) ** 2
    assert np.array_equal(grid.clipped, far > 1 + 1e-12)
    assert grid.clipped[grid.position((4, 0))]
    assert not grid.clipped[grid.position((-1, -1))]


@pytest.mark.parametrize('length', [10, 12.5, 20])
def test_count_close_to_disk_area(length):
    grid = build_grid(Aperture(length, length))
    assert 0.95 <= len(grid) / (math.pi * length ** 2) <= 1.05


def test_eta_upper_bound_examples():
    assert eta_upper_bound(Aperture(10, 10), Aperture(10, 10)) == 314
    assert eta_upper_bound(Aperture(1, 1), Aperture(10, 10)) == 3
    assert eta_upper_bound('2x5', '2x5') == 31
    assert eta_upper_bound('1x1', '10x10') == eta_upper_bound('10x10', '1x1')


def test_eta_upper_bound_accepts_grids():
    assert eta_upper_bound(build_grid('10x10'), build_grid('2x5')) == 31


@pytest.mark.parametrize('text', ['0x10', '-1x2', 'tenxten', '10', '1x2x3', 'nanx1'])
def test_invalid_apertures(text):
    with pytest.raises(ValidationError):
        Aperture.parse(text)


def test_aperture_parse_and_label():
    aperture = Aperture.parse('2.5X4')
    assert aperture == Aperture(2.5, 4)
    assert aperture.label == '2.5x4'


def test_grid_is_read_only():
    grid = build_grid('2x2')
    with pytest.raises(ValueError):
        grid.indices[0, 0] = 7
