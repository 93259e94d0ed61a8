"""Relative debugging with numerical drift removal for MiniFort programs."""

__version__ = "0.1.0"
