import logging
import csv
import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ConfigError, PreconditionError

TRUTHY = ('1', 'true', 'yes', 'on')
FALSY = ('0', 'false', 'no', 'off')


def parse_key_value(text: str, source: str = '<string>') -> dict:
    """
    Parse a flat key=value file

    Blank lines and '#' comments are ignored; surrounding whitespace is
    stripped from keys and values.

    Arguments:
        text (str): File contents

    Keyword arguments:
        source (str): Name used in error messages

    Returns:
        dict: Raw string values keyed by name

    Raises:
        ConfigError: A line without '=' or a repeated key

    """

    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value")
        key, val = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        out[key] = val
    return out


def _coerce(name: str, kind, value: str):
    if kind is bool:
        low = value.lower()
        if low in TRUTHY:
            return True
        if low in FALSY:
            return False
        raise ConfigError(f"'{name}' expects a boolean, got '{value}'")
    try:
        if kind is int:
            return int(value)
        if kind is float:
            return float(value)
    except ValueError:
        raise ConfigError(
            f"'{name}' expects {kind.__name__}, got '{value}'"
        )
    return value


def config_from_mapping(cls, mapping: dict):
    """
    Build a config dataclass from string values

    Values are coerced to the declared field types. Fields that are not
    given keep their defaults.

    Arguments:
        cls (type): Dataclass to build
        mapping (dict): Raw values keyed by field name

    Returns:
        Instance of cls

    Raises:
        ConfigError: Unknown key or a value that does not coerce

    """

    kinds = {fld.name: fld.type for fld in dataclasses.fields(cls)}
    unknown = sorted(set(mapping) - set(kinds))
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
    kwargs = {
        key: _coerce(key, kinds[key], val) if isinstance(val, str) else val
        for key, val in mapping.items()
    }
    logging.getLogger(__name__).debug('%s from %s', cls.__name__, kwargs)
    return cls(**kwargs)


def parse_grid(text: str) -> np.ndarray:
    """
    Parse 'lo:hi:step' into an inclusive grid; a single number is a
    one-point grid

    """

    try:
        parts = [float(val) for val in text.split(':')]
    except ValueError:
        raise PreconditionError(f"Bad grid '{text}'")
    if len(parts) == 1:
        return np.array(parts)
    if len(parts) != 3:
        raise PreconditionError(f"Grid must be lo:hi:step, got '{text}'")
    lo, hi, step = parts
    if not (step > 0 and hi >= lo and math.isfinite(hi)):
        raise PreconditionError(f"Bad grid bounds '{text}'")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def parse_range(text: str) -> range:
    """Parse an inclusive integer range 'lo:hi'"""

    try:
        lo, hi = (int(val) for val in text.split(':'))
    except ValueError:
        raise PreconditionError(f"Range must be lo:hi, got '{text}'")
    if hi < lo:
        raise PreconditionError(f"Empty range '{text}'")
    return range(lo, hi + 1)


def parallel_map(func, items, workers: int = 1) -> list:
    """
    Apply func to every item, merging results in input order

    Arguments:
        func (callable): Work function
        items (iterable): Work items

    Keyword arguments:
        workers (int): Worker threads; 1 runs in the calling thread

    Returns:
        list

    """

    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(func, item) for item in items]
        return [future.result() for future in futures]


def _cell(val) -> str:
    if isinstance(val, (bool, np.bool_)):
        return str(int(val))
    if isinstance(val, (int, np.integer)):
        return str(int(val))
    if isinstance(val, (float, np.floating)):
        return repr(float(val))
    return str(val)


def write_csv(path: str, header, rows) -> None:
    """
    Write rows to a CSV file with full double precision

    Arguments:
        path (str): Output file
        header (list): Column names
        rows (iterable): Sequences of cell values

    """

    logging.getLogger(__name__).info('Writing CSV to %s', path)
    with open(path, 'w', newline='') as fid:
        writer = csv.writer(fid)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(val) for val in row])
