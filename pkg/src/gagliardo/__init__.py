"""Weighted fractional Gagliardo seminorms on planar domains."""

import importlib
import os

# The bundled TBB is too old on some systems; the built-in pool always works.
# Must be set before numba starts its thread pool.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

# Exports resolve lazily so that the command-line entry point can configure
# the numba thread count before numba itself is imported.
_EXPORTS = {
    "Estimate": "estimate",
    "WeightField": "fields",
    "BoundarySampler": "geometry",
    "Domain": "geometry",
    "GeometryError": "geometry",
    "Point": "geometry",
    "koch_snowflake": "geometry",
    "make_polygon": "geometry",
    "SpaceParams": "seminorm",
    "full_seminorm": "seminorm",
    "lp_norm": "seminorm",
    "truncated_seminorm": "seminorm",
    "WhitneyDecomposition": "whitney",
    "decompose": "whitney",
}

__all__ = sorted(_EXPORTS)

__version__ = "0.1.0"


def __getattr__(name):
    module = _EXPORTS.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    value = getattr(importlib.import_module(f".{module}", __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return sorted(list(globals()) + __all__)
