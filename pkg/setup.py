#!/usr/bin/env python

from setuptools import setup, find_packages
from pathlib import Path

# Read the contents of README.md file
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text(encoding="utf-8")

setup(
    name="courant_verify",
    version="0.1.0",
    description="Exact symbolic verification of Courant algebroids, pseudo-Dirac structures and Courant relations",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    entry_points={
        "console_scripts": [
            "courant-verify=courant_verify.cli:main",
        ],
    },
    python_requires=">=3.8",
    install_requires=[
        "sympy>=1.9",
        "jsonschema>=3.2",
    ],
    extras_require={
        "test": [
            "pytest",
            "hypothesis",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
