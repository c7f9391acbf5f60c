#!/usr/bin/env python3
"""Setup script for zerosphere."""

from pathlib import Path
from setuptools import setup, find_packages

# Read version from package
version = {}
exec(Path("zerosphere/__init__.py").read_text(), version)

# Read requirements
requirements = Path("requirements.txt").read_text().strip().split("\n")

setup(
    name="zerosphere",
    version=version["__version__"],
    description="Zero-sphere checks for Helmholtz transforms and layer potentials of 3-D shapes",
    author="",
    python_requires=">=3.10",
    packages=find_packages(exclude=["tests"]),
    install_requires=requirements,
    extras_require={
        "test": ["pytest>=7"],
    },
    entry_points={
        "console_scripts": [
            "zerosphere=zerosphere.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Physics",
    ],
)
