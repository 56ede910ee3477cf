#!/usr/bin/env python

"""Script runs the sample scenarios under mtsim/data and reports exit codes and wall times.
   Sample call: mtsim-test.py                      # all samples, output under ./mtsim-test-out
   Sample call: mtsim-test.py -i kink,tdva -o /tmp/run1
   Sample call: mtsim-test.py -s 7                 # override every seed
"""

import argparse
import datetime
import logging as log
from pathlib import Path
import re
import sys

root_dir = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(root_dir))

from mtsim import cli  # noqa: E402

log.basicConfig(level=log.INFO)


if __name__ == "__main__":
    data_dir = root_dir / 'mtsim' / 'data'
    parser = argparse.ArgumentParser(description='Runs sample mtsim scenarios')
    parser.add_argument('-i', '--input', type=str, default=None,
                        help='(comma-separated subcommands or scenario filenames; default: all samples)')
    parser.add_argument('-o', '--output', type=Path, default=Path('mtsim-test-out'), help='(output directory root)')
    parser.add_argument('-s', '--seed', type=int, default=None)
    parser.add_argument('-v', '--verbose', action='count', default=0)
    args = parser.parse_args()
    if args.input:
        scenario_files = []
        for name in re.split(r'[;,]\s*', args.input):
            if Path(name).is_file():
                scenario_files.append(Path(name))
            else:
                scenario_files.append(data_dir / f'scenario-{name}.txt')
    else:
        scenario_files = sorted(data_dir.glob('scenario-*.txt'))
    n_failures = 0
    for scenario_file in scenario_files:
        out_dir = args.output / scenario_file.stem
        argv = ['--config', str(scenario_file), '--out', str(out_dir)]
        if args.seed is not None:
            argv += ['--seed', str(args.seed)]
        if args.verbose:
            argv.append('-v')
        start_time = datetime.datetime.now()
        exit_code = cli.main(argv)
        elapsed = (datetime.datetime.now() - start_time).total_seconds()
        if exit_code != cli.EXIT_OK:
            n_failures += 1
            log.warning(f'{scenario_file.name}: exit code {exit_code} after {elapsed:.2f} seconds')
        else:
            log.info(f'{scenario_file.name}: ok ({elapsed:.2f} seconds) -> {out_dir}')
    log.info(f'{len(scenario_files) - n_failures} of {len(scenario_files)} scenarios succeeded')
    sys.exit(1 if n_failures else 0)
