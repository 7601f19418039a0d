# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
"""Directivity-aware wavenumber-domain coupling coefficients, EDoF and ergodic capacity of XL-MIMO planar arrays"""

__version__ = '0.1.0'
