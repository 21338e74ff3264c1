"""
Setup script for SPNet Segmentation
Kept for compatibility with legacy tools. Configuration is in pyproject.toml.
"""

from setuptools import setup

setup()
