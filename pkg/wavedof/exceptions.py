# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
"""Exceptions raised by wavedof. Every class carries the exit code the command line front-end uses for it."""


class WavedofError(Exception):
    """Base class of all wavedof errors"""
    exit_code = 1


class ValidationError(WavedofError, ValueError):
    """Raised when an input violates a precondition, before any computation starts"""
    exit_code = 2


class PatternFormatError(ValidationError):
    """Raised when a pattern file has malformed rows, an irregular grid or negative gains

    :param message: description of the problem
    :param path: pattern file that was read
    :param lines: 1-based line numbers in the file that caused the error
    """

    def __init__(self, message, path=None, lines=None):
        self.path = path
        self.lines = list(lines) if lines is not None else []
        text = message
        if path is not None:
            text = f'{path}: {text}'
        if self.lines:
            shown = ', '.join(str(line) for line in self.lines[:10])
            if len(self.lines) > 10:
                shown += f', ... ({len(self.lines)} lines in total)'
            text += f' (lines {shown})'
        super().__init__(text)


class PatternCoverageError(PatternFormatError):
    """Raised when a tabulated pattern does not cover the full upper hemisphere"""


class PatternDomainError(ValidationError):
    """Raised when a pattern is queried outside the hemisphere or outside the unit disk"""


class ApertureMismatchError(ValidationError):

    def __init__(self, first, second):
        super().__init__(f'aperture mismatch: {first} vs {second}')


class IllPosedConfigurationError(ValidationError):
    """Raised when the least-squares system has no more rows than unknowns (N <= n)"""

    def __init__(self, n_elements, n_indices):
        super().__init__(f'least-squares projection is underdetermined: {n_elements} elements for {n_indices} '
                         f'wavenumber indices, use a smaller element spacing')


class NumericError(WavedofError, ArithmeticError):
    exit_code = 3


class QuadratureError(NumericError):
    """Raised when the quadrature of one cell does not reach the requested tolerance

    :param index: (m_x, m_y) of the offending cell
    :param detail: message of the underlying integration warning
    """

    def __init__(self, index, detail=''):
        self.index = tuple(int(i) for i in index)
        super().__init__(f'quadrature did not converge for cell {self.index}: {detail}'.rstrip(': '))


class RankDeficientError(NumericError):

    def __init__(self, rank, n_columns):
        self.rank = rank
        super().__init__(f'basis matrix is rank deficient (rank {rank} < {n_columns} columns), use a smaller '
                         f'wavenumber grid, more array elements or a positive regularization')


class EigenDecompositionError(NumericError):
    pass


class DataIOError(WavedofError, OSError):
    """Raised when an input file cannot be read or an output file cannot be written"""
    exit_code = 4

    def __init__(self, path, detail=''):
        self.path = str(path)
        text = f'cannot access {self.path}'
        if detail:
            text += f': {detail}'
        super().__init__(text)
