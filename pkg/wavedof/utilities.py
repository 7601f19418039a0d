# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #
import os
import json
import hashlib
import logging
import datetime
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from wavedof.exceptions import DataIOError, ValidationError
"""Shared helpers: logger set-up, seeded random streams, settings hashing, parallel mapping and the CSV/JSON table
writers used by every result type
"""

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def initialize_logger(name='wavedof', log_file='wavedof.log', level=logging.INFO):
    """Configure the package logger with a file handler (append mode) and a console handler

    Library modules log through ``logging.getLogger(__name__)`` and propagate to this logger. Calling the function
    again replaces the handlers instead of stacking them.

    :param name: logger name, the package name by default
    :param log_file: path of the log file, None disables file logging
    :param level: logging level of both handlers
    :return: the configured logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    formatter = logging.Formatter(LOG_FORMAT)
    if log_file is not None:
        # create a file handler
        handler = logging.FileHandler(log_file, mode='a')
        handler.setLevel(level)
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    # create a console handler
    console = logging.StreamHandler()
    console.setLevel(level)
    console.setFormatter(formatter)
    logger.addHandler(console)
    return logger


def child_generators(seed, indices):
    """Philox generators for selected children of SeedSequence(seed), child i drives item i of an ensemble

    SeedSequence(seed, spawn_key=(i,)) is the i-th child returned by SeedSequence(seed).spawn, so a block of an
    ensemble can be drawn without creating the streams of the other blocks.

    :param seed: non-negative integer seed
    :param indices: child indices
    :return: list of numpy Generators
    """
    if seed is None or int(seed) < 0:
        raise ValidationError(f'seed must be a non-negative integer, got {seed}')
    return [np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(i),))))
            for i in indices]


def spawn_generators(seed, count):
    """Generators of the first count children of SeedSequence(seed)"""
    return child_generators(seed, range(int(count)))


def make_generator(seed):
    """Single Philox generator; an existing Generator is passed through unchanged"""
    if isinstance(seed, np.random.Generator):
        return seed
    return spawn_generators(seed, 1)[0]


def complex_normal(rng, shape):
    """CN(0, 1) samples with independent N(0, 1/2) real and imaginary parts"""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def chunk_indices(count, chunk_size):
    """Split range(count) into consecutive blocks, independent of the number of workers"""
    return [np.arange(start, min(start + chunk_size, count)) for start in range(0, count, chunk_size)]


def parallel_map(function, items, n_jobs=1):
    """Evaluate function on every item with joblib, results are returned in input order"""
    items = list(items)
    if n_jobs == 1 or len(items) <= 1:
        return [function(item) for item in items]
    return Parallel(n_jobs=n_jobs)(delayed(function)(item) for item in items)


def to_builtin(value):
    """Convert numpy scalars/arrays and paths so json.dumps accepts them, NaN becomes None"""
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_builtin(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


def canonical_json(data):
    return json.dumps(to_builtin(data), sort_keys=True, separators=(',', ':'))


def settings_hash(config):
    """SHA-256 hex digest of the canonical JSON form of a configuration dictionary"""
    return hashlib.sha256(canonical_json(config).encode('utf-8')).hexdigest()


def ensure_parent(path):
    parent = Path(path).parent
    try:
        parent.mkdir(parents=True, exist_ok=True)
    except OSError as error:
        raise DataIOError(parent, error.strerror)


def write_table(frame, path, fmt='csv', metadata=None):
    """Write a result table as CSV (metadata as leading '# key: value' lines) or as JSON

    The CSV form is byte-identical for identical input. The JSON form adds a ``generated_at`` timestamp to the
    metadata and stores NaN as null.

    :param frame: pandas DataFrame with the rows to write
    :param path: output file
    :param fmt: 'csv' or 'json'
    :param metadata: dictionary with settings hash, resolved config and result specific entries
    :return: path that was written
    """
    metadata = dict(metadata or {})
    ensure_parent(path)
    try:
        if fmt == 'csv':
            with open(path, 'w', encoding='utf-8', newline='') as handle:
                for key, value in metadata.items():
                    handle.write(f'# {key}: {canonical_json(value)}\n')
                frame.to_csv(handle, index=False, float_format='%.17g', lineterminator='\n')
        elif fmt == 'json':
            metadata['generated_at'] = datetime.datetime.now(datetime.timezone.utc).isoformat()
            document = {'metadata': metadata, 'rows': frame.to_dict(orient='records')}
            with open(path, 'w', encoding='utf-8') as handle:
                json.dump(to_builtin(document), handle, indent=2, sort_keys=True)
                handle.write('\n')
        else:
            raise ValidationError(f'unknown output format {fmt!r}, use csv or json')
    except OSError as error:
        raise DataIOError(path, error.strerror)
    return path


def read_table(path):
    """Read a table written by write_table, returns (frame, metadata)"""
    if not os.path.isfile(path):
        raise DataIOError(path, 'no such file')
    try:
        if str(path).endswith('.json'):
            with open(path, encoding='utf-8') as handle:
                document = json.load(handle)
            return pd.DataFrame(document['rows']), document.get('metadata', {})
        metadata = {}
        with open(path, encoding='utf-8') as handle:
            for line in handle:
                if not line.startswith('#'):
                    break
                key, _, value = line[1:].partition(':')
                metadata[key.strip()] = json.loads(value)
        return pd.read_csv(path, comment='#', float_precision='round_trip'), metadata
    except OSError as error:
        raise DataIOError(path, error.strerror)
    except (ValueError, KeyError) as error:
        raise ValidationError(f'{path}: not a wavedof table ({error})')


def output_path(base, *labels):
    """Derive 'stem_label1_label2.ext' from a base output path"""
    base = Path(base)
    labels = [str(label) for label in labels if label]
    if not labels:
        return base
    return base.with_name(base.stem + '_' + '_'.join(labels) + base.suffix)
