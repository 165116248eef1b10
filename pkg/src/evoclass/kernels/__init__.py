"""Kernel backend selection.

Two interchangeable implementations of the forward kernels exist:

* ``_native`` -- Cython extension, plain C loops, releases the GIL so the
  evaluation thread pool scales on multi-core hosts;
* ``pycore`` -- NumPy fallback used when the extension was not built.

The compiled backend is preferred when present.  Set ``EVOCLASS_KERNELS``
to ``native`` or ``python`` to force one (``native`` errors if the
extension is missing).  Both accumulate inner sums in float64, so they
agree to float32 round-off; a run is bit-deterministic within whichever
backend it selected.
"""

from __future__ import annotations

import os

from ..errors import ConfigError
from . import pycore

try:
    from . import _native
except ImportError:  # extension not built
    _native = None


def available_backends() -> dict:
    """Name -> module for every importable backend."""
    backends = {"python": pycore}
    if _native is not None:
        backends["native"] = _native
    return backends


def get_backend(name: str):
    """Look up a backend module by name ('native' or 'python')."""
    backends = available_backends()
    if name not in backends:
        raise ConfigError(
            f"kernel backend {name!r} not available (built: {sorted(backends)})",
            path="EVOCLASS_KERNELS",
        )
    return backends[name]


def _select_default():
    requested = os.environ.get("EVOCLASS_KERNELS", "auto").strip().lower()
    if requested in ("", "auto"):
        return _native if _native is not None else pycore
    return get_backend(requested)


_backend = _select_default()

NAME = _backend.NAME
conv2d = _backend.conv2d
linear = _backend.linear
conv_output_size = pycore.conv_output_size
