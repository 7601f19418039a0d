# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import math
import logging
from dataclasses import dataclass, field

import numpy as np

from wavedof.exceptions import ValidationError
"""Wavenumber-domain sampling lattice of a rectangular aperture. All lengths are in wavelengths and wavenumbers are
normalized by k = 2π/λ, so every admissible sampling point lies in the closed unit disk.
"""

logger = logging.getLogger(__name__)

# relative slack of the disk membership test, keeps points exactly on the circle
DISK_SLACK = 1e-12


@dataclass(frozen=True)
class Aperture:
    """Rectangular aperture of len_x by len_y wavelengths

    >>> Aperture.parse('10x10')
    Aperture(len_x=10.0, len_y=10.0)
    """
    len_x: float
    len_y: float

    def __post_init__(self):
        for name in ('len_x', 'len_y'):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ValidationError(f'aperture {name} must be a number, got {value!r}')
            if not math.isfinite(value) or value <= 0:
                raise ValidationError(f'aperture {name} must be a positive finite length, got {value}')
            object.__setattr__(self, name, value)

    @classmethod
    def parse(cls, text):
        """Parse the command-line form 'AxB', e.g. '10x10' or '2.5X4'"""
        if isinstance(text, Aperture):
            return text
        parts = str(text).strip().lower().split('x')
        if len(parts) != 2:
            raise ValidationError(f'aperture must be written as AxB, got {text!r}')
        try:
            len_x, len_y = float(parts[0]), float(parts[1])
        except ValueError:
            raise ValidationError(f'aperture must be written as AxB, got {text!r}')
        return cls(len_x, len_y)

    @property
    def label(self):
        return f'{self.len_x:g}x{self.len_y:g}'

    @property
    def area(self):
        return self.len_x * self.len_y


@dataclass(frozen=True, eq=False)
class WavenumberGrid:
    """Index set of the wavenumber lattice with one integration cell per index

    :param aperture: aperture the grid belongs to
    :param indices: (n, 2) integer array of (m_x, m_y), lexicographic order
    :param cells: (n, 4) array of cell bounds (x_lo, x_hi, y_lo, y_hi) in normalized wavenumbers
    :param clipped: (n,) boolean array, True when the cell rectangle is not inside the unit disk
    """
    aperture: Aperture
    indices: np.ndarray
    cells: np.ndarray
    clipped: np.ndarray
    _lookup: dict = field(init=False, repr=False)

    def __post_init__(self):
        for name in ('indices', 'cells', 'clipped'):
            array = np.array(getattr(self, name))
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        lookup = {(int(mx), int(my)): position for position, (mx, my) in enumerate(self.indices)}
        object.__setattr__(self, '_lookup', lookup)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self._lookup)

    def __contains__(self, index):
        return tuple(int(i) for i in index) in self._lookup

    def position(self, index):
        """Row of (m_x, m_y) in the canonical order"""
        try:
            return self._lookup[tuple(int(i) for i in index)]
        except KeyError:
            raise ValidationError(f'index {tuple(index)} is not part of the {self.aperture.label} grid')

    @property
    def anchors(self):
        """Anchor points (m_x/len_x, m_y/len_y), the lower-left cell corners"""
        return self.indices / np.array([self.aperture.len_x, self.aperture.len_y])

    @property
    def interior(self):
        return ~self.clipped

    def __eq__(self, other):
        if not isinstance(other, WavenumberGrid):
            return NotImplemented
        return self.aperture == other.aperture and np.array_equal(self.indices, other.indices)

    __hash__ = None


def build_grid(aperture):
    """Build the wavenumber grid of an aperture

    An index (m_x, m_y) is admitted when its anchor satisfies (m_x/len_x)^2 + (m_y/len_y)^2 <= 1. The test is done
    as (m_x len_y)^2 + (m_y len_x)^2 <= (len_x len_y)^2 so integer apertures keep the points on the circle.

    :param aperture: Aperture or 'AxB' string
    :return: WavenumberGrid
    """
    aperture = Aperture.parse(aperture)
    len_x, len_y = aperture.len_x, aperture.len_y
    mx_range = np.arange(-math.floor(len_x), math.floor(len_x) + 1)
    my_range = np.arange(-math.floor(len_y), math.floor(len_y) + 1)
    mx, my = np.meshgrid(mx_range, my_range, indexing='ij')
    mx, my = mx.ravel(), my.ravel()
    inside = (mx * len_y) ** 2 + (my * len_x) ** 2 <= (len_x * len_y) ** 2 * (1 + DISK_SLACK)
    indices = np.column_stack([mx[inside], my[inside]]).astype(np.int64)

    x_lo = indices[:, 0] / len_x
    y_lo = indices[:, 1] / len_y
    cells = np.column_stack([x_lo, (indices[:, 0] + 1) / len_x, y_lo, (indices[:, 1] + 1) / len_y])
    # farthest corner decides whether the rectangle leaves the disk
    far_x = np.maximum(np.abs(cells[:, 0]), np.abs(cells[:, 1]))
    far_y = np.maximum(np.abs(cells[:, 2]), np.abs(cells[:, 3]))
    clipped = far_x ** 2 + far_y ** 2 > 1 + DISK_SLACK
    logger.debug(f'grid {aperture.label}: {len(indices)} indices, {int(clipped.sum())} clipped cells')
    return WavenumberGrid(aperture, indices, cells, clipped)


def eta_upper_bound(tx, rx):
    """Upper bound of the EDoF, min over both apertures of floor(pi len_x len_y)

    :param tx: transmit Aperture or WavenumberGrid
    :param rx: receive Aperture or WavenumberGrid
    :return: integer bound
    """
    bounds = []
    for item in (tx, rx):
        aperture = item.aperture if isinstance(item, WavenumberGrid) else Aperture.parse(item)
        bounds.append(math.floor(math.pi * aperture.area))
    return int(min(bounds))
