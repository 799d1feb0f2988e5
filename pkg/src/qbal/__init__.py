"""Proof kernel and compilation toolchain for quantified bounded affine logic."""

__version__ = "0.1.0"
