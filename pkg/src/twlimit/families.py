"""Graph families used as test beds for sequences and limits."""
from __future__ import annotations

from .graph import RootedKTree


def rooted_path(n: int) -> RootedKTree:
    """Path oriented toward vertex 0."""
    return RootedKTree.from_parent_lists(1, [[]] + [[v - 1] for v in range(1, n)])


def star(n: int) -> RootedKTree:
    """Center 0 with n-1 leaves pointing at it."""
    return RootedKTree.from_parent_lists(1, [[]] + [[0]] * (n - 1))


def binary_in_tree(height: int, colored: bool | str = False) -> RootedKTree:
    """Complete binary tree of the given height, edges toward the root.

    ``colored=True`` makes the edge from an odd (left) child KEPT and from an
    even one FILL; that coloring depends on ancestry.  ``colored="leaves"``
    makes leaf edges FILL and all other edges KEPT, which is local.
    """
    n = (1 << (height + 1)) - 1
    first_leaf = (1 << height) - 1
    parents = [[]] + [[(v - 1) // 2] for v in range(1, n)]

    def color(v):
        if colored == "leaves":
            return 1 if v >= first_leaf else 0
        return 1 if colored and v % 2 == 0 else 0

    colors = [[]] + [[color(v)] for v in range(1, n)]
    return RootedKTree.from_parent_lists(1, parents, colors)


def comb(n: int, colored: bool = False) -> RootedKTree:
    """Spine 0..m-1 (toward 0) with one pendant child per spine vertex; n = 2m.

    With ``colored`` the pendant edges are FILL and the spine edges KEPT.
    """
    m = n // 2
    parents = [[]] + [[v - 1] for v in range(1, m)] + [[v] for v in range(m)]
    colors = [[]] + [[0]] * (m - 1) + [[1 if colored else 0]] * m
    return RootedKTree.from_parent_lists(1, parents, colors)


def fan_spine(m: int, fan: int = 3) -> RootedKTree:
    """A rooted 2-tree: square-of-path spine h_0..h_{m-1} with a fan of ``fan`` vertices on each h_j, j >= 1.

    Spine: h_j -> h_{j-1} (1-edge) and h_j -> h_{j-2} (2-edge).  Fan on h_j:
    s_1 -> h_j (1), s_1 -> h_{j-1} (2); s_t -> s_{t-1} (1), s_t -> h_j (2).
    Every 2-edge of a fan vertex has a detour along 1-edges.
    """
    parents: list[list[int]] = [[], [0]] + [[j - 1, j - 2] for j in range(2, m)]
    for j in range(1, m):
        prev = None
        for t in range(fan):
            v = len(parents)
            parents.append([j, j - 1] if t == 0 else [prev, j])
            prev = v
    return RootedKTree.from_parent_lists(2, parents)
