"""Pure-Python versions of the compiled kernels (same signatures and results)."""
from __future__ import annotations


def component_sizes(indptr, indices, removed) -> list[int]:
    """Sizes of connected components of the CSR graph with ``removed`` vertices deleted, descending."""
    n = len(indptr) - 1
    seen = bytearray(removed)
    sizes = []
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = 1
        stack = [s]
        size = 0
        while stack:
            u = stack.pop()
            size += 1
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if not seen[w]:
                    seen[w] = 1
                    stack.append(w)
        sizes.append(size)
    sizes.sort(reverse=True)
    return sizes


def largest_after_removal(indptr, indices, removed, candidates) -> list[int]:
    """For each candidate c: size of the largest component once c is also deleted."""
    out = []
    rem = bytearray(removed)
    for c in candidates:
        rem[c] = 1
        sizes = component_sizes(indptr, indices, rem)
        out.append(sizes[0] if sizes else 0)
        rem[c] = removed[c]
    return out
