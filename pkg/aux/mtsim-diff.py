#!/usr/bin/env python

"""Script checks two mtsim output directories for changes, e.g. runs with different MTSIM_THREADS.
   manifest.json is skipped, as it records the wall time.
   Sample call: mtsim-diff.py run1 run2
   Sample call: mtsim-diff.py -r run1 run2     # recurse into per-scenario subdirectories
"""

import argparse
import difflib
import logging as log
from pathlib import Path
import sys
from typing import List

log.basicConfig(level=log.INFO)

SKIPPED_FILES = ('manifest.json',)


class Bcolors:
    OKGREEN = '\033[92m'
    FAIL = '\033[91m'
    ENDC = '\033[0m'


def result_files(directory: Path, recursive: bool) -> List[Path]:
    pattern = '**/*' if recursive else '*'
    return sorted(path.relative_to(directory) for path in directory.glob(pattern)
                  if path.is_file() and path.name not in SKIPPED_FILES)


def compare_dirs(dir1: Path, dir2: Path, recursive: bool = False, max_diff_lines: int = 10) -> int:
    """Returns the number of files that are missing on one side or differ byte-wise."""
    files1, files2 = result_files(dir1, recursive), result_files(dir2, recursive)
    n_problems = 0
    for missing in sorted(set(files1) ^ set(files2)):
        log.warning(f'{Bcolors.FAIL}Only in {dir1 if missing in files1 else dir2}: {missing}{Bcolors.ENDC}')
        n_problems += 1
    for rel_path in sorted(set(files1) & set(files2)):
        bytes1, bytes2 = (dir1 / rel_path).read_bytes(), (dir2 / rel_path).read_bytes()
        if bytes1 == bytes2:
            continue
        n_problems += 1
        log.warning(f'{Bcolors.FAIL}Differs: {rel_path}{Bcolors.ENDC}')
        diff = difflib.unified_diff(bytes1.decode('utf-8', errors='replace').splitlines(),
                                    bytes2.decode('utf-8', errors='replace').splitlines(),
                                    fromfile=str(dir1 / rel_path), tofile=str(dir2 / rel_path), lineterm='')
        for i, line in enumerate(diff):
            if i >= max_diff_lines:
                sys.stderr.write('    ...\n')
                break
            sys.stderr.write(f'    {line}\n')
    if n_problems == 0:
        log.info(f'{Bcolors.OKGREEN}{len(files1)} files identical{Bcolors.ENDC}')
    return n_problems


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description='Byte-compares two mtsim output directories')
    parser.add_argument('dir1', type=Path)
    parser.add_argument('dir2', type=Path)
    parser.add_argument('-r', '--recursive', action='store_true', default=False)
    parser.add_argument('-n', '--max_diff_lines', type=int, default=10)
    args = parser.parse_args()
    for directory in (args.dir1, args.dir2):
        if not directory.is_dir():
            log.error(f'Not a directory: {directory}')
            sys.exit(2)
    sys.exit(1 if compare_dirs(args.dir1, args.dir2, args.recursive, args.max_diff_lines) else 0)
