import functools
import itertools

import pytest

from twlimit.graph import RootedKTree


def all_rooted_1trees(max_n: int):
    """Every rooted 1-tree (parent vectors v -> p(v) < v) on 1..max_n vertices."""
    for n in range(1, max_n + 1):
        for parents in itertools.product(*[range(v) for v in range(1, n)]):
            yield RootedKTree.from_parent_lists(1, [[]] + [[p] for p in parents])


@functools.lru_cache(maxsize=None)
def cached_machine(family: str, D: int = 2):
    """Machines shared between test modules; building them dominates runtime."""
    from twlimit import families
    from twlimit.machine_build import build_machine

    if family == "path":
        return build_machine([families.rooted_path(n) for n in (8, 16, 32, 64)], D)
    if family == "bintree":
        return build_machine([families.binary_in_tree(h) for h in (5, 6, 7, 8)], D, window=4)
    if family == "bintree-leaves":
        return build_machine([families.binary_in_tree(h, "leaves") for h in (5, 6, 7, 8)], D, window=4)
    if family == "comb":
        return build_machine([families.comb(n, True) for n in (16, 32, 64, 128)], D)
    if family == "comb-large":
        # boundary types bias the last-graph frequencies by O(1/n); keep that well below 3 sigma at N=10^6
        return build_machine([families.comb(n, True) for n in (512, 1024, 2048, 4096)], D)
    if family == "fan":
        return build_machine([families.fan_spine(m) for m in (8, 16, 32, 64)], D)
    if family == "star":
        return build_machine([families.star(n) for n in (8, 16, 32, 64)], D)
    raise KeyError(family)


@pytest.fixture
def machine():
    return cached_machine
