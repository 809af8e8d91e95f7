"""Modeling limits of bounded tree-width graph sequences.

Rooted k-tree encoding, local types, Stone measures over graph sequences and
a finite-depth limit machine with checks for its structural invariants.
"""
from .graph import EdgeColor, RootedKTree, validate_rooted_ktree
from .kernels import BACKEND

__all__ = ["BACKEND", "EdgeColor", "RootedKTree", "validate_rooted_ktree"]
__version__ = "0.1.0"
