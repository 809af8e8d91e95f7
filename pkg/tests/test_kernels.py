import os
import subprocess
import sys

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twlimit import _kernels_py, kernels
from twlimit.graph import generate_random_rooted_ktree

try:
    from twlimit import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

backends = [_kernels_py] + ([compiled] if compiled is not None else [])


def reference_sizes(T, removed):
    G = nx.Graph()
    G.add_nodes_from(v for v in range(T.n) if not removed[v])
    G.add_edges_from((v, w) for v, w, _, _ in T.edges() if not removed[v] and not removed[w])
    return sorted((len(c) for c in nx.connected_components(G)), reverse=True)


@pytest.mark.parametrize("mod", backends, ids=lambda m: m.__name__)
@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 30), k=st.integers(1, 3), seed=st.integers(0, 999), mask=st.integers(0, 2**30))
def test_component_sizes_match_reference(mod, n, k, seed, mask):
    T = generate_random_rooted_ktree(n, k, seed)
    removed = bytearray((mask >> v) & 1 for v in range(n))
    indptr, indices = kernels.csr(T.neighbors)
    assert list(mod.component_sizes(indptr, indices, removed)) == reference_sizes(T, removed)


@pytest.mark.parametrize("mod", backends, ids=lambda m: m.__name__)
@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 25), seed=st.integers(0, 999))
def test_largest_after_removal(mod, n, seed):
    T = generate_random_rooted_ktree(n, 2, seed)
    removed = bytearray(n)
    indptr, indices = kernels.csr(T.neighbors)
    cands = list(range(n))
    got = list(mod.largest_after_removal(indptr, indices, removed, cands))
    want = []
    for v in cands:
        r = bytearray(n)
        r[v] = 1
        sizes = reference_sizes(T, r)
        want.append(sizes[0] if sizes else 0)
    assert got == want


def test_env_selects_python_fallback():
    env = dict(os.environ, TWLIMIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from twlimit import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.skipif(compiled is None, reason="extension not built")
def test_default_backend_is_compiled():
    assert kernels.BACKEND == "compiled"
