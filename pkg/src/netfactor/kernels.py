"""Kernel selection: compiled extension when importable, else pure Python.

Set ``NETFACTOR_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("NETFACTOR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py

nnls_gram = _impl.nnls_gram
square_objective = _impl.square_objective
square_descent = _impl.square_descent
max_fooling_clique = _impl.max_fooling_clique
accumulate = _impl.accumulate

__all__ = ["BACKEND", "nnls_gram", "square_objective", "square_descent", "max_fooling_clique", "accumulate"]
