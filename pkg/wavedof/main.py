# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import os
import sys
import json
import math
import argparse
import logging
from dataclasses import dataclass, field, fields

import numpy as np
import pandas as pd
import yaml

from wavedof.channel import ArrayGeometry, MAX_SPACING, transform_matrix
from wavedof.coupling import compute_coupling
from wavedof.data_preparation import prepare_data
from wavedof.emcc import EmccConfig, compare_with_reference, estimate_coupling
from wavedof.exceptions import DataIOError, ValidationError, WavedofError
from wavedof.grid import Aperture, build_grid
from wavedof.metrics import MetricsReport, capacity_asymptotic, capacity_from_eigenvalues, channel_eigenvalues, \
    db_to_linear, edof_deterministic_drawn, edof_statistical
from wavedof.pattern import RadiationPattern
from wavedof.utilities import initialize_logger, output_path, parallel_map, settings_hash, write_table
"""Command line front-end: resolves the run configuration (defaults < YAML file < YAML section of the subcommand <
flags), runs one subcommand and writes CSV or JSON results with the settings hash in their metadata
"""

COMMANDS = ('coupling', 'emcc', 'edof', 'capacity', 'sweep', 'prepare')
# settings that do not change any number in the results
UNHASHED = ('out', 'log_file', 'jobs', 'format')
DEFAULT_SPACINGS = {'emcc': [0.5], 'capacity': [0.5], 'sweep': [0.125, 0.25, 0.5]}

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    command: str
    aperture: list = field(default_factory=lambda: [Aperture(10, 10)])
    rx_aperture: Aperture = None
    spacing: list = field(default_factory=list)
    pattern: list = field(default_factory=lambda: ['hypothetical'])
    gamma: float = 0.95
    snr_db: list = field(default_factory=lambda: [10.0])
    paths: int = 200
    realizations: int = 5000
    trials: int = 500
    seed: int = 0
    tol: float = 1e-9
    regularization: float = 1e-10
    det_realizations: int = 200
    jobs: int = 1
    out: str = None
    format: str = 'csv'
    log_file: str = 'wavedof.log'
    asymptotic: bool = False
    input: str = None
    step: float = None

    def to_dict(self):
        data = {item.name: getattr(self, item.name) for item in fields(self)}
        data['aperture'] = [aperture.label for aperture in self.aperture]
        data['rx_aperture'] = self.rx_aperture.label if self.rx_aperture is not None else None
        return data

    def hashed(self):
        return {key: value for key, value in self.to_dict().items() if key not in UNHASHED}

    @property
    def settings_hash(self):
        return settings_hash(self.hashed())

    def metadata(self, **entries):
        return {**entries, 'settings_hash': self.settings_hash, 'config': self.hashed()}

    @property
    def tx_aperture(self):
        return self.aperture[0]

    @property
    def receive_aperture(self):
        return self.rx_aperture if self.rx_aperture is not None else self.aperture[0]

    def output(self, *labels):
        base = self.out if self.out is not None else f'wavedof_{self.command}.{self.format}'
        return output_path(base, *labels)


def _as_list(value):
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return list(value)
    if isinstance(value, str):
        return [item.strip() for item in value.split(',') if item.strip()]
    return [value]


def _number(name, value, kind=float):
    try:
        number = kind(value)
    except (TypeError, ValueError):
        raise ValidationError(f'{name} must be a {kind.__name__}, got {value!r}')
    if kind is int and isinstance(value, float) and not value.is_integer():
        raise ValidationError(f'{name} must be an integer, got {value!r}')
    if kind is float and not math.isfinite(number):
        raise ValidationError(f'{name} must be finite, got {value!r}')
    return number


def _boolean(name, value):
    if isinstance(value, bool):
        return value
    if str(value).lower() in ('1', 'true', 'yes', 'on'):
        return True
    if str(value).lower() in ('0', 'false', 'no', 'off'):
        return False
    raise ValidationError(f'{name} must be a boolean, got {value!r}')


def _normalize(raw):
    """Convert and range-check every recognised setting, unknown keys are rejected"""
    known = {item.name for item in fields(RunConfig)} - {'command'}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValidationError(f'unknown configuration keys: {", ".join(unknown)}')
    settings = {}
    for key, value in raw.items():
        if key == 'aperture':
            value = [Aperture.parse(item) for item in _as_list(value)]
            if not value:
                raise ValidationError('at least one aperture is required')
        elif key == 'rx_aperture':
            value = Aperture.parse(value) if value is not None else None
        elif key == 'spacing':
            value = [_number('spacing', item) for item in _as_list(value)]
            for spacing in value:
                if not 0 < spacing <= MAX_SPACING:
                    raise ValidationError(f'element spacing must satisfy 0 < d <= {MAX_SPACING} wavelengths, got '
                                          f'{spacing}')
        elif key == 'pattern':
            value = [str(item) for item in _as_list(value)]
            if not value:
                raise ValidationError('at least one pattern is required')
        elif key == 'snr_db':
            value = [_number('snr_db', item) for item in _as_list(value)]
            if not value:
                raise ValidationError('at least one SNR is required')
        elif key in ('gamma', 'tol', 'regularization'):
            value = _number(key, value)
        elif key == 'step':
            value = _number(key, value) if value is not None else None
        elif key in ('paths', 'realizations', 'trials', 'seed', 'det_realizations', 'jobs'):
            value = _number(key, value, int)
        elif key == 'asymptotic':
            value = _boolean(key, value)
        elif key in ('out', 'log_file', 'input', 'format'):
            value = str(value) if value is not None else None
        settings[key] = value
    return settings


def _check_ranges(config):
    checks = [(0 < config.gamma < 1, f'gamma must satisfy 0 < gamma < 1, got {config.gamma}'),
              (config.paths >= 1, f'paths must be >= 1, got {config.paths}'),
              (config.realizations >= 2, f'realizations must be >= 2, got {config.realizations}'),
              (config.trials >= 1, f'trials must be >= 1, got {config.trials}'),
              (config.seed >= 0, f'seed must be >= 0, got {config.seed}'),
              (config.tol > 0, f'tol must be positive, got {config.tol}'),
              (config.regularization >= 0, f'regularization must be >= 0, got {config.regularization}'),
              (config.det_realizations >= 1, f'det_realizations must be >= 1, got {config.det_realizations}'),
              (config.jobs != 0, 'jobs must not be 0'),
              (config.format in ('csv', 'json'), f'format must be csv or json, got {config.format!r}'),
              (config.step is None or config.step > 0, f'step must be positive, got {config.step}')]
    for passed, message in checks:
        if not passed:
            raise ValidationError(message)
    if config.command == 'sweep' and len(config.pattern) not in (1, len(config.spacing)):
        raise ValidationError(f'sweep needs one pattern or one pattern per spacing, got {len(config.pattern)} '
                              f'patterns for {len(config.spacing)} spacings')
    if config.command in ('emcc', 'capacity'):
        for key in ('spacing', 'pattern'):
            if len(getattr(config, key)) > 1:
                raise ValidationError(f'{config.command} takes a single {key}, got {getattr(config, key)}; '
                                      f'use sweep for several')
    if config.command == 'prepare' and config.input is None:
        raise ValidationError('prepare needs --input with the folder of pattern files')
    if config.command != 'prepare':
        # file patterns are read here so a missing file fails before any computation
        for spec in dict.fromkeys(config.pattern):
            RadiationPattern.parse(spec)


def _read_config_file(path):
    if not os.path.isfile(path):
        raise DataIOError(path, 'config file not found')
    try:
        with open(path, encoding='utf-8') as handle:
            document = yaml.safe_load(handle) or {}
    except yaml.YAMLError as error:
        raise ValidationError(f'{path}: invalid YAML ({error})')
    except OSError as error:
        raise DataIOError(path, error.strerror)
    if not isinstance(document, dict):
        raise ValidationError(f'{path}: the config file must hold a mapping')
    return {str(key).replace('-', '_'): value for key, value in document.items()}


def resolve_config(command, cli_settings=None, config_file=None):
    """Merge built-in defaults, the YAML file, its section named after the command and the flags

    :param command: subcommand name
    :param cli_settings: flags given on the command line (None values are ignored)
    :param config_file: optional YAML file
    :return: validated RunConfig
    """
    if command not in COMMANDS:
        raise ValidationError(f'unknown command {command!r}')
    layers = []
    if config_file is not None:
        document = _read_config_file(config_file)
        layers.append({key: value for key, value in document.items() if key not in COMMANDS})
        section = document.get(command) or {}
        if not isinstance(section, dict):
            raise ValidationError(f'{config_file}: section {command!r} must be a mapping')
        layers.append({str(key).replace('-', '_'): value for key, value in section.items()})
    layers.append({key: value for key, value in (cli_settings or {}).items() if value is not None})
    settings = {}
    for layer in layers:
        settings.update(_normalize(layer))
    if 'spacing' not in settings:
        settings['spacing'] = list(DEFAULT_SPACINGS.get(command, []))
    config = RunConfig(command=command, **settings)
    _check_ranges(config)
    return config


def _spectra(config, pattern):
    """Transmit and receive coupling spectra, computed once when both apertures agree"""
    sig_t = compute_coupling(build_grid(config.tx_aperture), pattern, tol=config.tol, n_jobs=config.jobs)
    if config.receive_aperture == config.tx_aperture:
        return sig_t, sig_t
    return sig_t, compute_coupling(build_grid(config.receive_aperture), pattern, tol=config.tol, n_jobs=config.jobs)


def _write_rows(config, rows, path, **metadata):
    frame = pd.DataFrame(rows)
    if config.format == 'csv':
        frame = frame.drop(columns=['settings_hash'], errors='ignore')
    return write_table(frame, path, fmt=config.format, metadata=config.metadata(**metadata))


def cmd_coupling(config):
    """One spectrum file per (aperture, pattern)"""
    written = []
    for aperture in config.aperture:
        grid = build_grid(aperture)
        for spec in config.pattern:
            pattern = RadiationPattern.parse(spec)
            spectrum = compute_coupling(grid, pattern, tol=config.tol, n_jobs=config.jobs)
            path = config.output(aperture.label if len(config.aperture) > 1 else None,
                                 pattern.label if len(config.pattern) > 1 else None)
            written.append(spectrum.write(path, fmt=config.format, metadata=config.metadata()))
            logger.log(logging.INFO, f'Wrote {len(spectrum)} coupling coefficients to {path}')
    return written


def cmd_emcc(config):
    """Estimated spectrum and comparison against quadrature for every aperture"""
    pattern = RadiationPattern.parse(config.pattern[0])
    spacing = config.spacing[0]
    emcc_config = EmccConfig(paths=config.paths, realizations=config.realizations, seed=config.seed,
                             ls_regularization=config.regularization, n_jobs=config.jobs)
    written = []
    for aperture in config.aperture:
        grid = build_grid(aperture)
        result = estimate_coupling(ArrayGeometry(aperture, spacing), grid, pattern, emcc_config)
        reference = compute_coupling(grid, pattern, tol=config.tol, n_jobs=config.jobs)
        table = compare_with_reference(result, reference)
        interior_error = table.loc[table['interior'], 'rel_error'].max()
        logger.log(logging.INFO, f'EMCC {aperture.label}: max interior relative error {interior_error:.4f}, '
                                 f'centre coefficient {result.spectrum.value_at((0, 0)):.6g}')
        label = aperture.label if len(config.aperture) > 1 else None
        estimate_path = config.output(label)
        written.append(result.write(estimate_path, fmt=config.format, metadata=config.metadata()))
        comparison_path = config.output(label, 'comparison')
        written.append(write_table(table, comparison_path, fmt=config.format,
                                   metadata=config.metadata(aperture=aperture.label, pattern=pattern.spec,
                                                            spacing=spacing, max_interior_rel_error=interior_error)))
    return written


def cmd_edof(config):
    """Statistical EDoF and, for every requested spacing, deterministic EDoF from channel draws"""
    pattern = RadiationPattern.parse(config.pattern[0])
    sig_t, sig_r = _spectra(config, pattern)
    edof = edof_statistical(sig_t, sig_r, config.gamma)
    logger.log(logging.INFO, f'Statistical EDoF {edof.eta_e} (tx {edof.eta_e_tx}, rx {edof.eta_e_rx}), '
                             f'eta_u {edof.eta_u}')
    base = {'pattern': pattern.spec, 'gamma': edof.gamma, 'eta_u': edof.eta_u, 'eta_e_tx': edof.eta_e_tx,
            'eta_e_rx': edof.eta_e_rx, 'eta_e': edof.eta_e}
    rows = []
    for spacing in config.spacing or [None]:
        row = {'spacing': spacing if spacing is not None else np.nan, **base, 'eta_det': np.nan}
        if spacing is not None:
            row['eta_det'] = _deterministic_edof(config, sig_t, sig_r, spacing)
            logger.log(logging.INFO, f'd={spacing:g}: deterministic EDoF {row["eta_det"]}')
        rows.append(row)
    return [_write_rows(config, rows, config.output(), aperture=config.tx_aperture.label,
                        rx_aperture=config.receive_aperture.label)]


def _deterministic_edof(config, sig_t, sig_r, spacing):
    phi_t = transform_matrix(ArrayGeometry(config.tx_aperture, spacing), sig_t.grid)
    phi_r = transform_matrix(ArrayGeometry(config.receive_aperture, spacing), sig_r.grid)
    return edof_deterministic_drawn(sig_t, sig_r, phi_t, phi_r, realizations=config.det_realizations,
                                    seed=config.seed, gamma=config.gamma)


def _capacity_rows(config, sig_t, sig_r, edof, eigenvalues, spacing, **columns):
    n_tx = ArrayGeometry(config.tx_aperture, spacing).count
    n_rx = ArrayGeometry(config.receive_aperture, spacing).count
    n_t = len(sig_t)
    full_terms = min(edof.eta_u, eigenvalues.shape[1], n_t)
    rows = []
    for snr_db in config.snr_db:
        snr = float(db_to_linear(snr_db))
        full = capacity_from_eigenvalues(eigenvalues, n_tx, n_rx, n_t, snr, full_terms)
        truncated = capacity_from_eigenvalues(eigenvalues, n_tx, n_rx, n_t, snr, min(edof.eta_e, full_terms))
        extra = {'spacing': spacing, **columns, 'n_tx': n_tx, 'n_rx': n_rx,
                 'truncated_capacity_bits': truncated.mean_bits, 'truncated_ci': truncated.ci_half_width}
        if config.asymptotic:
            extra['asymptotic_bits'] = capacity_asymptotic(sig_t, sig_r, n_tx, n_rx, snr)
        report = MetricsReport.from_results(edof, full, config.seed, config.settings_hash, snr_db=snr_db, **extra)
        rows.append(report.to_dict())
    return rows


def cmd_capacity(config):
    """Full, EDoF-truncated and optionally asymptotic capacity for every SNR at the first spacing"""
    pattern = RadiationPattern.parse(config.pattern[0])
    sig_t, sig_r = _spectra(config, pattern)
    edof = edof_statistical(sig_t, sig_r, config.gamma)
    eigenvalues = channel_eigenvalues(sig_t, sig_r, config.trials, config.seed, config.jobs)
    rows = _capacity_rows(config, sig_t, sig_r, edof, eigenvalues, config.spacing[0], pattern=pattern.spec)
    for row in rows:
        logger.log(logging.INFO, f'snr {row["snr_db"]:g} dB: capacity {row["capacity_bits"]:.3f} '
                                 f'+/- {row["ci"]:.3f} bits/s/Hz, truncated to eta_e={row["eta_e"]}: '
                                 f'{row["truncated_capacity_bits"]:.3f}')
    return [_write_rows(config, rows, config.output(), aperture=config.tx_aperture.label,
                        rx_aperture=config.receive_aperture.label)]


def cmd_sweep(config):
    """EDoF and capacity over element spacings (one pattern per spacing or a shared one) and SNRs"""
    specs = config.pattern if len(config.pattern) == len(config.spacing) else config.pattern * len(config.spacing)
    # spectra and eigenvalue draws depend on the pattern only, not on the spacing
    prepared = {}
    for spec in dict.fromkeys(specs):
        pattern = RadiationPattern.parse(spec)
        sig_t, sig_r = _spectra(config, pattern)
        edof = edof_statistical(sig_t, sig_r, config.gamma)
        eigenvalues = channel_eigenvalues(sig_t, sig_r, config.trials, config.seed, config.jobs)
        prepared[spec] = (pattern, sig_t, sig_r, edof, eigenvalues)

    def run_point(point):
        spacing, spec = point
        pattern, sig_t, sig_r, edof, eigenvalues = prepared[spec]
        eta_det = _deterministic_edof(config, sig_t, sig_r, spacing)
        return _capacity_rows(config, sig_t, sig_r, edof, eigenvalues, spacing, pattern=pattern.spec,
                              eta_det=eta_det)

    points = list(zip(config.spacing, specs))
    logger.log(logging.INFO, f'Sweeping {len(points)} spacings x {len(config.snr_db)} SNRs')
    rows = [row for block in parallel_map(run_point, points, n_jobs=config.jobs) for row in block]

    best = {}
    for snr_db in config.snr_db:
        candidates = [row for row in rows if row['snr_db'] == snr_db]
        winner = max(candidates, key=lambda row: row['capacity_bits'])
        best[f'{snr_db:g}'] = winner['spacing']
        logger.log(logging.INFO, f'snr {snr_db:g} dB: best spacing d={winner["spacing"]:g} with '
                                 f'{winner["capacity_bits"]:.3f} bits/s/Hz')
    return [_write_rows(config, rows, config.output(), aperture=config.tx_aperture.label,
                        rx_aperture=config.receive_aperture.label, best_spacing=best)]


def cmd_prepare(config):
    out = config.out if config.out is not None else 'prepared_patterns'
    return prepare_data(config.input, out, step_deg=config.step)


HANDLERS = {'coupling': cmd_coupling, 'emcc': cmd_emcc, 'edof': cmd_edof, 'capacity': cmd_capacity,
            'sweep': cmd_sweep, 'prepare': cmd_prepare}


def build_parser():
    # flags shared by every subcommand, defaults come from resolve_config
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-c', '--config', help='YAML file with settings, a section per subcommand overrides the top '
                                               'level', action='store', default=None)
    common.add_argument('-a', '--aperture', help='aperture(s) AxB in wavelengths, comma separated', default=None)
    common.add_argument('-r', '--rx-aperture', dest='rx_aperture', help='receive aperture AxB, defaults to the '
                                                                        'first --aperture', default=None)
    common.add_argument('-d', '--spacing', help='element spacing(s) in wavelengths, comma separated', default=None)
    common.add_argument('-p', '--pattern', help='cos:M, hypothetical or file:PATH, comma separated', default=None)
    common.add_argument('-g', '--gamma', help='EDoF energy threshold', type=float, default=None)
    common.add_argument('-s', '--snr-db', dest='snr_db', help='SNR value(s) in dB, comma separated', default=None)
    common.add_argument('-S', '--paths', help='multipaths per EMCC realization', type=int, default=None)
    common.add_argument('-I', '--realizations', help='EMCC realizations', type=int, default=None)
    common.add_argument('-t', '--trials', help='Monte-Carlo capacity trials', type=int, default=None)
    common.add_argument('--seed', help='random seed', type=int, default=None)
    common.add_argument('--tol', help='absolute quadrature tolerance', type=float, default=None)
    common.add_argument('--regularization', help='ridge weight of the EMCC least squares', type=float, default=None)
    common.add_argument('--det-realizations', dest='det_realizations', type=int, default=None,
                        help='channel draws for the deterministic EDoF')
    common.add_argument('-j', '--jobs', help='joblib workers', type=int, default=None)
    common.add_argument('-o', '--out', help='output file (folder for prepare)', default=None)
    common.add_argument('-f', '--format', help='csv or json', choices=['csv', 'json'], default=None)
    common.add_argument('-l', '--log-file', dest='log_file', help='log file, appended to', default=None)
    common.add_argument('--asymptotic', help='add the large-system capacity approximation', action='store_const',
                        const=True, default=None)
    common.add_argument('-i', '--input', help='folder with pattern files (prepare)', default=None)
    common.add_argument('--step', help='resampling step in degrees (prepare)', type=float, default=None)

    parser = argparse.ArgumentParser(prog='wavedof', description='Directivity-aware wavenumber-domain coupling '
                                                                 'coefficients, EDoF and capacity of XL-MIMO arrays')
    subparsers = parser.add_subparsers(dest='command', required=True)
    subparsers.add_parser('coupling', parents=[common], help='coupling coefficients by quadrature')
    subparsers.add_parser('emcc', parents=[common], help='simulation-based coupling coefficients')
    subparsers.add_parser('edof', parents=[common], help='statistical and deterministic EDoF')
    subparsers.add_parser('capacity', parents=[common], help='ergodic capacity per SNR')
    subparsers.add_parser('sweep', parents=[common], help='EDoF and capacity over element spacings')
    subparsers.add_parser('prepare', parents=[common], help='validate and normalize pattern files')
    return parser


def main(argv=None):
    """Run one subcommand, returns the exit code (0, 2 validation, 3 numeric, 4 I/O)"""
    args = build_parser().parse_args(argv)
    cli_settings = {key: value for key, value in vars(args).items()
                    if key not in ('command', 'config') and value is not None}
    try:
        config = resolve_config(args.command, cli_settings, args.config)
        initialize_logger(log_file=config.log_file)
        logger.log(logging.INFO, f'wavedof {config.command}, settings hash {config.settings_hash}')
        written = HANDLERS[config.command](config)
        logger.log(logging.INFO, f'Finished {config.command}: {len(written)} files written')
    except WavedofError as error:
        logger.log(logging.ERROR, str(error))
        print(json.dumps({'error': type(error).__name__, 'message': str(error), 'exit_code': error.exit_code}),
              file=sys.stderr)
        return error.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
