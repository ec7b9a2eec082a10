"""Minimum-cost-flow inner loops: numba kernels with a numpy fallback.

The backend is picked once at import from the DEFALLOC_BACKEND environment
variable (``auto`` | ``numba`` | ``numpy``; default ``auto`` = numba when
importable).  ``set_backend`` overrides it at runtime, e.g. for benchmarks.
Both paths run the identical algorithm and produce identical residuals, so
simulation output does not depend on the backend.

Algorithm: successive shortest paths with node potentials - one Dijkstra on
reduced costs per augmentation, early-terminated at the sink.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["OK", "INFEASIBLE", "STALLED", "active_backend", "set_backend",
           "run_ssp", "warmup"]

OK = 0
INFEASIBLE = 1
STALLED = 2


def _ssp_loops(indptr, frm, to, res, cost, rev, n_nodes, source, sink,
               deficit, tol, stats):
    """Plain-loop kernel; compiled with numba. Mutates `res`, fills `stats`
    with (dijkstra count, augmentation count)."""
    inf = np.inf
    pi = np.zeros(n_nodes)
    dist = np.empty(n_nodes)
    pred = np.empty(n_nodes, np.int64)
    visited = np.empty(n_nodes, np.bool_)
    remaining = deficit
    max_aug = 4 * to.shape[0] + 64
    n_dij = 0
    n_aug = 0
    while remaining > tol:
        if n_aug > max_aug:
            stats[0] = n_dij
            stats[1] = n_aug
            return STALLED
        n_dij += 1
        for v in range(n_nodes):
            dist[v] = inf
            pred[v] = -1
            visited[v] = False
        dist[source] = 0.0
        while True:
            u = -1
            best = inf
            for v in range(n_nodes):
                if not visited[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u < 0:
                break
            visited[u] = True
            if u == sink:
                # settling order is nondecreasing, so capping the potential
                # update at dist[sink] keeps reduced costs nonnegative
                break
            du = dist[u]
            for a in range(indptr[u], indptr[u + 1]):
                if res[a] > tol:
                    v = to[a]
                    # never relax into settled nodes: roundoff in the reduced
                    # costs could otherwise knot the predecessor chain
                    if not visited[v]:
                        nd = du + ((cost[a] + pi[u]) - pi[v])
                        if nd < dist[v]:
                            dist[v] = nd
                            pred[v] = a
        dsink = dist[sink]
        if dsink == inf:
            stats[0] = n_dij
            stats[1] = n_aug
            return INFEASIBLE
        for v in range(n_nodes):
            dv = dist[v]
            pi[v] += dv if dv < dsink else dsink
        # bottleneck along the predecessor path, then push
        f = remaining
        v = sink
        while v != source:
            a = pred[v]
            if res[a] < f:
                f = res[a]
            v = frm[a]
        v = sink
        while v != source:
            a = pred[v]
            res[a] -= f
            res[rev[a]] += f
            v = frm[a]
        remaining -= f
        n_aug += 1
    stats[0] = n_dij
    stats[1] = n_aug
    return OK


def _ssp_numpy(indptr, frm, to, res, cost, rev, n_nodes, source, sink,
               deficit, tol, stats):
    """Vectorised fallback with the same semantics as the loop kernel."""
    arc_idx = np.arange(to.shape[0], dtype=np.int64)
    pi = np.zeros(n_nodes)
    remaining = deficit
    max_aug = 4 * to.shape[0] + 64
    n_dij = 0
    n_aug = 0
    while remaining > tol:
        if n_aug > max_aug:
            stats[0] = n_dij
            stats[1] = n_aug
            return STALLED
        n_dij += 1
        dist = np.full(n_nodes, np.inf)
        pred = np.full(n_nodes, -1, dtype=np.int64)
        visited = np.zeros(n_nodes, dtype=bool)
        dist[source] = 0.0
        for _ in range(n_nodes):
            masked = np.where(visited, np.inf, dist)
            u = int(np.argmin(masked))
            if masked[u] == np.inf:
                break
            visited[u] = True
            if u == sink:
                break
            sl = slice(indptr[u], indptr[u + 1])
            usable = (res[sl] > tol) & ~visited[to[sl]]
            if not usable.any():
                continue
            aa = arc_idx[sl][usable]
            vv = to[sl][usable]
            nd = dist[u] + ((cost[sl][usable] + pi[u]) - pi[vv])
            improved = nd < dist[vv]
            if not improved.any():
                continue
            aa, vv, nd = aa[improved], vv[improved], nd[improved]
            np.minimum.at(dist, vv, nd)
            winner = nd == dist[vv]
            # reversed fancy assignment so the first minimal arc wins ties,
            # matching the sequential kernel
            pred[vv[winner][::-1]] = aa[winner][::-1]
        dsink = dist[sink]
        if dsink == np.inf:
            stats[0] = n_dij
            stats[1] = n_aug
            return INFEASIBLE
        pi += np.minimum(dist, dsink)
        f = remaining
        v = sink
        while v != source:
            a = pred[v]
            if res[a] < f:
                f = res[a]
            v = int(frm[a])
        v = sink
        while v != source:
            a = pred[v]
            res[a] -= f
            res[rev[a]] += f
            v = int(frm[a])
        remaining -= f
        n_aug += 1
    stats[0] = n_dij
    stats[1] = n_aug
    return OK


try:
    from numba import njit

    _ssp_numba = njit(cache=True, nogil=True)(_ssp_loops)
    _NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _ssp_numba = None
    _NUMBA_AVAILABLE = False


def _resolve(name: str) -> str:
    name = (name or "auto").lower()
    if name not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected auto, numba, or numpy")
    if name == "numba" and not _NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not importable")
    if name == "auto":
        return "numba" if _NUMBA_AVAILABLE else "numpy"
    return name


_BACKEND = _resolve(os.environ.get("DEFALLOC_BACKEND", "auto"))


def active_backend() -> str:
    return _BACKEND


def set_backend(name: str) -> str:
    """Switch the kernel backend; returns the previous backend name."""
    global _BACKEND
    previous = _BACKEND
    _BACKEND = _resolve(name)
    return previous


def run_ssp(indptr, frm, to, res, cost, rev, n_nodes, source, sink, deficit,
            tol, backend: str | None = None, stats=None) -> int:
    """Run min-cost augmentation on the residual arrays; returns a status code."""
    which = _resolve(backend) if backend else _BACKEND
    fn = _ssp_numba if which == "numba" else _ssp_numpy
    if stats is None:
        stats = np.zeros(2, dtype=np.int64)
    return int(
        fn(indptr, frm, to, res, cost, rev, np.int64(n_nodes),
           np.int64(source), np.int64(sink), float(deficit), float(tol), stats)
    )


def warmup() -> None:
    """Trigger JIT compilation on a two-node toy problem."""
    indptr = np.array([0, 1, 3, 4], dtype=np.int64)
    frm = np.array([0, 1, 1, 2], dtype=np.int64)
    to = np.array([1, 0, 2, 1], dtype=np.int64)
    res = np.array([1.0, 0.0, 1.0, 0.0])
    cost = np.array([0.0, 0.0, 0.0, 0.0])
    rev = np.array([1, 0, 3, 2], dtype=np.int64)
    run_ssp(indptr, frm, to, res, cost, rev, 3, 0, 2, 1.0, 1e-9)
