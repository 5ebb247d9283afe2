#!/usr/bin/env python

from setuptools import setup, find_packages
# To use a consistent encoding
from codecs import open
from os import path

here = path.abspath(path.dirname(__file__))

# Get the long description from the README file
with open(path.join(here, 'README.rst'), encoding='utf-8') as f:
    long_description = f.read()

setup(
    name='dpsd',
    version='0.1.0',
    description='Differentially private sketches for Hamming and edit distance queries over string databases',
    long_description=long_description,
    license='BSD-2',

    # See https://pypi.python.org/pypi?%3Aaction=list_classifiers
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Topic :: Security :: Cryptography',
        'License :: OSI Approved :: BSD License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
    ],

    packages=find_packages(exclude=["\.venv.*", "examples", "examples.*"]),
    install_requires=['setuptools', 'numpy>=1.20', 'xxhash>=2.0', 'PyYAML', 'pandas', 'scipy', 'tqdm'],
    entry_points={
        'console_scripts': [
            'dpsd = dpsd.cli.main:main',
        ],
    },
    python_requires='>=3.8'
)
