"""Stokes cell problems in dilute periodic perforations.

Shapes are given as dicts in the JSON shape format, or as paths to JSON files.
"""

import json
import os

from ._core import (
    Capacity,
    CellAverages,
    CellCorrector,
    Hole,
    InputError,
    Mesh,
    RegimeParams,
    capacity,
    classify,
    energy_identity_dev,
    green_selftest,
)
from . import _core

__all__ = [
    "Capacity", "CellAverages", "CellCorrector", "Hole", "InputError", "Mesh", "RegimeParams",
    "capacity", "classify", "effective_model", "energy_identity_dev", "green_selftest",
    "hole", "mesh", "rescaling_law", "shape_json",
]


def shape_json(shape):
    if isinstance(shape, dict):
        return json.dumps(shape)
    if isinstance(shape, (str, os.PathLike)):
        with open(shape) as f:
            return f.read()
    raise TypeError("shape must be a dict or a path")


def _size(n):
    if isinstance(n, (tuple, list)):
        return "x".join(str(v) for v in n)
    return str(n)


def mesh(shape, n):
    """Boundary mesh; n is an int (2D) or a pair (ntheta, nphi) (3D)."""
    return Mesh(shape_json(shape), _size(n))


def hole(shape, n):
    return Hole(shape_json(shape), _size(n))


def rescaling_law(shape, scales, n=256):
    return _core.rescaling_law(shape_json(shape), list(scales), n)


def effective_model(cap, params):
    return json.loads(_core.effective_model(cap, params))
