#!/usr/bin/env python

import mtsim
from pathlib import Path

from setuptools import setup, find_namespace_packages

long_description = Path('README.md').read_text(encoding='utf-8', errors='ignore')

classifiers = [  # copied from https://pypi.org/classifiers/
    'Development Status :: 3 - Alpha',
    'Intended Audience :: Science/Research',
    'Topic :: Scientific/Engineering',
    'Topic :: Scientific/Engineering :: Physics',
    'Topic :: Scientific/Engineering :: Bio-Informatics',
    'Programming Language :: Python :: 3 :: Only',
]

setup(
    name='mtsim',
    version=mtsim.__version__,
    description=mtsim.__description__,
    long_description=long_description,
    long_description_content_type='text/markdown',
    classifiers=classifiers,
    python_requires='>=3.8',
    platforms=['any'],
    packages=find_namespace_packages(exclude=['aux', 'test', 'examples', 'examples.*']),
    keywords=['microtubules', 'kink solitons', 'decoherence', 'Lindblad equation', 'quantum trajectories',
              'Gaussian variational ansatz', 'renormalization group flow', 'dilaton black holes'],
    entry_points={
        'console_scripts': [
            'mtsim=mtsim.cli:main',
        ],
    },
    install_requires=[
        'regex>=2021.8.3',
        'tqdm>=4.40',
        'numpy>=1.20',
        'scipy>=1.7',
    ],
    extras_require={
        'test': ['pytest>=6.0'],
    },
    package_data={'mtsim': ['data/*.txt']},
    include_package_data=True,
    zip_safe=False,
)
