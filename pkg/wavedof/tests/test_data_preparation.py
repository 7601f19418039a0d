# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import os

import numpy as np
import pandas as pd
import pytest

from wavedof.data_preparation import convert_file, prepare_data, tabulate_pattern
from wavedof.exceptions import DataIOError, PatternFormatError
from wavedof.main import main
from wavedof.pattern import gain_angular, load_pattern


def create_pattern_folder(folder):
    folder.mkdir()
    tabulate_pattern('cos:2', str(folder / 'cos2_db.csv'), step_deg=15, db=True)
    rows = [(theta, phi, 1.0 + theta / 90) for theta in (0, 45, 90) for phi in (0, 120, 240, 360)]
    pd.DataFrame(rows, columns=['theta_deg', 'phi_deg', 'gain']).to_csv(folder / 'measured.csv', index=False)
    (folder / 'notes.txt').write_text('not a pattern')
    return folder


def test_prepare_data(tmp_path):
    source = create_pattern_folder(tmp_path / 'raw')
    written = prepare_data(str(source), str(tmp_path / 'prepared'))
    assert [os.path.basename(path) for path in written] == ['cos2_db.csv', 'measured.csv']
    canonical = pd.read_csv(written[0])
    assert list(canonical.columns) == ['theta_deg', 'phi_deg', 'gain']
    assert canonical['gain'].min() >= 0
    measured = pd.read_csv(written[1])
    # the 360 column is folded onto phi = 0
    assert sorted(measured['phi_deg'].unique()) == [0, 120, 240]
    assert gain_angular(load_pattern(written[0]), np.pi / 3, 0.0) == pytest.approx(0.25, rel=1e-9)


def test_convert_file_resamples(tmp_path):
    source = create_pattern_folder(tmp_path / 'raw')
    (tmp_path / 'out').mkdir()
    path = convert_file(str(source / 'measured.csv'), str(tmp_path / 'out'), step_deg=30)
    pattern = load_pattern(path)
    assert list(pattern.theta_deg) == [0, 30, 60, 90]
    assert np.allclose(pattern.gains[1], 1 + 30 / 90)


def test_prepare_data_errors(tmp_path):
    with pytest.raises(DataIOError):
        prepare_data(str(tmp_path / 'absent'), str(tmp_path / 'prepared'))
    (tmp_path / 'empty').mkdir()
    assert prepare_data(str(tmp_path / 'empty'), str(tmp_path / 'prepared')) == []
    broken = tmp_path / 'broken'
    broken.mkdir()
    (broken / 'bad.csv').write_text('theta_deg,phi_deg,gain\n0,0,1\n90,0,oops\n')
    with pytest.raises(PatternFormatError):
        prepare_data(str(broken), str(tmp_path / 'prepared'))


def test_prepare_command(tmp_path):
    source = create_pattern_folder(tmp_path / 'raw')
    out = tmp_path / 'canonical'
    code = main(['prepare', '-i', str(source), '-o', str(out), '--step', '5', '--log-file', str(tmp_path / 'log')])
    assert code == 0
    assert sorted(os.listdir(out)) == ['cos2_db.csv', 'measured.csv']
    assert len(pd.read_csv(out / 'measured.csv')) == 19 * 72
