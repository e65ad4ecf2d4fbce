"""Decoder backends: compiled extension with a pure-NumPy fallback.

The compiled backend (``pcdsim.kernels._core``, built from Cython) and the
NumPy backend implement identical decode semantics; the compiled one exists
because the Monte-Carlo experiments decode tens of thousands of frames.
Selection order: the ``PCDSIM_BACKEND`` environment variable (``cython`` or
``numpy``) wins if set; otherwise the compiled extension is used when the
import succeeds, NumPy otherwise.  :func:`active_backend` reports the choice.
"""

from __future__ import annotations

import os

from . import py_backend
from .graph import DecoderGraph, build_bp_graph, build_pcd_graph

try:
    from . import _core
except ImportError:  # extension not built: NumPy fallback
    _core = None

__all__ = [
    "DecoderGraph",
    "build_bp_graph",
    "build_pcd_graph",
    "decode",
    "active_backend",
    "available_backends",
]


def available_backends() -> tuple[str, ...]:
    return ("numpy", "cython") if _core is not None else ("numpy",)


def _resolve(backend: str) -> str:
    if backend == "auto":
        backend = os.environ.get("PCDSIM_BACKEND", "").lower() or (
            "cython" if _core is not None else "numpy"
        )
    if backend == "cython" and _core is None:
        raise RuntimeError(
            "compiled backend requested but the extension is not built; "
            "reinstall the package or set PCDSIM_BACKEND=numpy"
        )
    if backend not in ("numpy", "cython"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def active_backend() -> str:
    """The backend `auto` resolves to in this process."""
    return _resolve("auto")


def decode(g: DecoderGraph, u_init, max_iter: int, backend: str = "auto"):
    """Decode one frame on the selected backend.

    See :func:`pcdsim.kernels.py_backend.decode` for the result contract;
    both backends honor it identically.
    """
    if _resolve(backend) == "cython":
        return _core.decode(g, u_init, max_iter)
    return py_backend.decode(g, u_init, max_iter)
