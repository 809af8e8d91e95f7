"""Kernel selection: the compiled extension when it imports, the pure-Python version otherwise.

Set ``TWLIMIT_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("TWLIMIT_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        pass

component_sizes = _impl.component_sizes
largest_after_removal = _impl.largest_after_removal


def csr(adjacency) -> tuple[list[int], list[int]]:
    """Compressed adjacency from a list of neighbour collections."""
    indptr = [0]
    indices: list[int] = []
    for nb in adjacency:
        indices.extend(sorted(nb))
        indptr.append(len(indices))
    return indptr, indices
