# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import glob
import os
import logging
from pathlib import Path

from wavedof.exceptions import DataIOError
from wavedof.pattern import RadiationPattern, load_pattern, write_pattern
"""Run this before coupling or sweep runs that use measured or simulated patterns: every pattern CSV in a folder is
validated and rewritten as a canonical linear-gain table (gain_db columns are converted, phi = 360 columns dropped)
"""

logger = logging.getLogger(__name__)


def convert_file(file_path, path_to_output, step_deg=None):
    """Validate one pattern file and write its canonical form under the same name

    :param file_path: pattern CSV
    :param path_to_output: output folder
    :param step_deg: resample onto a grid with this step, None keeps the nodes of the file
    :return: path of the canonical file
    """
    pattern = load_pattern(file_path)
    target = os.path.join(path_to_output, os.path.basename(file_path))
    write_pattern(pattern, target, step_deg=step_deg)
    return target


def tabulate_pattern(spec, file_path, step_deg=1.0, db=False):
    """Write an analytic pattern ('cos:M' or 'hypothetical') as a table, e.g. to check the tabulated route"""
    return write_pattern(RadiationPattern.parse(spec), file_path, step_deg=step_deg, db=db)


def prepare_data(path_to_patterns, path_to_output, step_deg=None):
    """Convert every *.csv pattern in path_to_patterns into canonical form in path_to_output

    :return: list of written files in sorted order
    """
    if not os.path.isdir(path_to_patterns):
        raise DataIOError(path_to_patterns, 'pattern folder not found')
    Path(path_to_output).mkdir(parents=True, exist_ok=True)
    pattern_files = sorted(glob.glob(os.path.join(path_to_patterns, '*.csv')))
    if not pattern_files:
        logger.log(logging.INFO, f'No pattern files found in {path_to_patterns}')
        return []
    logger.log(logging.INFO, f'{len(pattern_files)} pattern files provided to prepare')
    written = []
    for file_path in pattern_files:
        logger.log(logging.INFO, f'Converting pattern file {file_path}')
        written.append(convert_file(file_path, path_to_output, step_deg=step_deg))
    logger.log(logging.INFO, f'Prepared {len(written)} pattern files in {path_to_output}')
    return written
