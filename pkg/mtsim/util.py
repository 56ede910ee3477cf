#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Shared utilities for mtsim: exceptions, physical constants and unit conversions,
atomic CSV/JSON writers and the ordered thread fan-out used by ensemble runs.
"""
# -*- encoding: utf-8 -*-
from concurrent.futures import ThreadPoolExecutor
import csv
import json
import logging as log
import math
import os
from pathlib import Path
import tempfile
from typing import Any, Callable, Iterable, List, Optional, Sequence, TypeVar
import numpy as np
from tqdm.auto import tqdm

T = TypeVar('T')
R = TypeVar('R')


class MTSimError(Exception):
    """Base class of all mtsim errors."""


class ParameterError(MTSimError, ValueError):
    """Violated precondition, detected before any numerical work starts."""


class NumericalError(MTSimError, ArithmeticError):
    """Failure during a run (blow-up, lost positivity, unconverged quadrature etc.)."""


# SI constants (CODATA 2018)
ELEMENTARY_CHARGE = 1.602176634e-19      # C
EV_IN_J = ELEMENTARY_CHARGE              # J per eV
HBAR_SI = 1.054571817e-34                # J s
HBAR_EV_S = 6.582119569e-16              # eV s
HBAR_C_EV_M = 1.973269804e-7             # eV m
SPEED_OF_LIGHT = 299792458.0             # m/s
PROTON_MASS_EV = 938.27208816e6          # eV
GEV_IN_EV = 1.0e9
# grand-unified string scale
M_GUS_GEV = 1.0e18
DIMER_CHARGE = 36 * ELEMENTARY_CHARGE    # C, effective charge per tubulin dimer


def joule_to_ev(energy_j: float) -> float:
    return energy_j / EV_IN_J


def gev_to_ev(energy_gev: float) -> float:
    return energy_gev * GEV_IN_EV


def kg_to_ev(mass_kg: float) -> float:
    """Rest energy m c^2 in eV."""
    return mass_kg * SPEED_OF_LIGHT ** 2 / EV_IN_J


def energy_to_time(energy_ev: float) -> float:
    """Natural-unit conversion E -> hbar/E in seconds."""
    return HBAR_EV_S / energy_ev


def energy_to_length(energy_ev: float) -> float:
    """Natural-unit conversion E -> hbar c/E in meters."""
    return HBAR_C_EV_M / energy_ev


def gus_time() -> float:
    """String time unit hbar/M_gus, about 1e-42 s."""
    return energy_to_time(gev_to_ev(M_GUS_GEV))


def gus_length() -> float:
    """String length unit hbar c/M_gus, about 1e-32 cm."""
    return energy_to_length(gev_to_ev(M_GUS_GEV))


def thread_count() -> int:
    """Number of worker threads: MTSIM_THREADS if set, else the CPU count."""
    n = os.cpu_count() or 1
    if env_value := os.environ.get('MTSIM_THREADS'):
        try:
            n = int(env_value)
        except ValueError:
            log.warning(f"Ignoring non-integer MTSIM_THREADS value '{env_value}'")
    return max(1, n)


def ordered_map(func: Callable[[T], R], items: Sequence[T], max_workers: Optional[int] = None,
                progress_bar: bool = False, desc: Optional[str] = None) -> List[R]:
    """Maps func over items on a thread pool; results come back in item order.
    Callers make the split into items independent of the number of workers,
    so that results do not depend on the thread count."""
    n_workers = max_workers or thread_count()
    with ThreadPoolExecutor(max_workers=n_workers) as executor:
        results = []
        with tqdm(total=len(items), disable=not progress_bar, dynamic_ncols=True, desc=desc) as bar:
            for result in executor.map(func, items):
                results.append(result)
                bar.update(1)
    return results


def block_ranges(n: int, block_size: int) -> List[range]:
    """[0, n) split into consecutive ranges of block_size (last one possibly shorter)."""
    return [range(start, min(start + block_size, n)) for start in range(0, n, block_size)]


def format_number(value: Any) -> str:
    """Shortest round-trip text for numbers, so that reruns are byte-identical."""
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def json_ready(value: Any) -> Any:
    """Converts numpy values and non-finite floats (-> None) into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_ready(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Path):
        return str(value)
    return value


def _atomic_write(path: Path, write: Callable[[Any], None]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            write(f)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Writes a CSV file via temp-then-rename."""
    def write(f):
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    return _atomic_write(path, write)


def write_json(path: Path, obj: Any) -> Path:
    """Writes a JSON file via temp-then-rename."""
    def write(f):
        json.dump(json_ready(obj), f, indent=2, sort_keys=False)
        f.write('\n')
    return _atomic_write(path, write)


def complex_array_from_pairs(value: Any, ndim: int, name: str = 'array') -> np.ndarray:
    """Row-major nested lists of [re, im] pairs -> complex ndarray with ndim dimensions
    (ndim=1 for state vectors, 2 for matrices, 3 for lists of matrices)."""
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ParameterError(f'{name} is not a rectangular array of numbers')
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise ParameterError(f'{name} must be a {ndim}-d array of [re, im] pairs, got shape {arr.shape}')
    return arr[..., 0] + 1j * arr[..., 1]


def complex_pairs(matrix: np.ndarray) -> list:
    """Complex ndarray -> nested lists of [re, im] pairs, the layout complex_array_from_pairs reads."""
    m = np.asarray(matrix, dtype=complex)
    return np.stack([m.real, m.imag], axis=-1).tolist()
