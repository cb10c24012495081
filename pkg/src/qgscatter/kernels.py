"""Hot numeric kernels: per-edge trig tables and batched M-matrix assembly.

Everything downstream (scattering sweeps, secular scans, tau-asymptotics,
least-squares residuals) reduces to evaluating, for a batch of spectral
points z with k = sqrt(z), Im k >= 0, and for every compact edge of length l:

    cot(k l),   1/sin(k l),   tan(k l / 2)

and scattering those values into an N x N matrix per spectral point.

Naive complex trig overflows for k = i*tau once tau*l > ~350.  With
q = exp(i k l) (so |q| <= 1 on the chosen branch) the three functions are

    cot(w)    =  i (q^2 + 1) / (q^2 - 1)
    1/sin(w)  =  2i q / (q^2 - 1)
    tan(w/2)  = -i (q - 1) / (q + 1)

which are overflow-free for all Im w >= 0 and converge to the correct
limits (-i, 0, i) as q -> 0.  |sin(w)| = |q^2 - 1| / (2 |q|) is returned
alongside for singularity screening (it may legitimately be +inf).

Two implementations are provided: a pure-numpy vectorized path and a
numba @njit path.  Selection:

    QGSCATTER_NUMBA=0   force the numpy path
    QGSCATTER_NUMBA=1   require numba (ImportError if unavailable)
    unset               use numba when importable, else numpy

The active path is reported in BACKEND.  benchmarks/bench_kernels.py
compares the two.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "edge_trig_tables",
    "assemble_compact",
    "edge_trig_tables_numpy",
    "assemble_compact_numpy",
    "warmup",
]


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------

def edge_trig_tables_numpy(k, lengths):
    """Trig tables for all (spectral point, edge) pairs.

    Parameters
    ----------
    k : complex ndarray, shape (nk,)
        Square roots of the spectral points, Im k >= 0.
    lengths : float ndarray, shape (ne,)
        Compact edge lengths.

    Returns
    -------
    cot, csc, tan_half : complex ndarray, shape (nk, ne)
    sin_abs : float ndarray, shape (nk, ne)
        |sin(k l)|, +inf where exp(i k l) underflows.
    """
    w = np.multiply.outer(k, lengths)
    q = np.exp(1j * w)
    q2 = q * q
    d = q2 - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        cot = 1j * (q2 + 1.0) / d
        csc = 2j * q / d
        tan_half = -1j * (q - 1.0) / (q + 1.0)
        sin_abs = np.abs(d) / (2.0 * np.abs(q))
    return cot, csc, tan_half, sin_abs


def assemble_compact_numpy(k, u_idx, v_idx, cot, csc, tan_half, n):
    """Scatter edge tables into compact-part Weyl matrices.

    Diagonal: -k * cot(k l) from each non-loop endpoint, +2k * tan(k l / 2)
    per loop.  Off-diagonal: +k / sin(k l) per connecting edge.

    Returns complex ndarray of shape (nk, n, n).
    """
    nk = k.shape[0]
    out = np.zeros((nk, n, n), dtype=np.complex128)
    if u_idx.size == 0:
        return out
    loop = u_idx == v_idx
    kcol = k[:, None]
    if np.any(loop):
        contrib = 2.0 * kcol * tan_half[:, loop]
        np.add.at(out, (slice(None), u_idx[loop], u_idx[loop]), contrib)
    nl = ~loop
    if np.any(nl):
        un, vn = u_idx[nl], v_idx[nl]
        dcontrib = -kcol * cot[:, nl]
        ocontrib = kcol * csc[:, nl]
        np.add.at(out, (slice(None), un, un), dcontrib)
        np.add.at(out, (slice(None), vn, vn), dcontrib)
        np.add.at(out, (slice(None), un, vn), ocontrib)
        np.add.at(out, (slice(None), vn, un), ocontrib)
    return out


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

def _build_numba():
    import numba

    # error_model="numpy": the sin_abs division must yield +inf (not raise)
    # when exp(i k l) underflows at large tau*l.
    @numba.njit(cache=True, error_model="numpy")
    def edge_trig_tables_nb(k, lengths):
        nk = k.shape[0]
        ne = lengths.shape[0]
        cot = np.empty((nk, ne), dtype=np.complex128)
        csc = np.empty((nk, ne), dtype=np.complex128)
        tan_half = np.empty((nk, ne), dtype=np.complex128)
        sin_abs = np.empty((nk, ne), dtype=np.float64)
        for i in range(nk):
            for j in range(ne):
                w = k[i] * lengths[j]
                q = np.exp(1j * w)
                q2 = q * q
                d = q2 - 1.0
                cot[i, j] = 1j * (q2 + 1.0) / d
                csc[i, j] = 2j * q / d
                tan_half[i, j] = -1j * (q - 1.0) / (q + 1.0)
                sin_abs[i, j] = abs(d) / (2.0 * abs(q))
        return cot, csc, tan_half, sin_abs

    @numba.njit(cache=True)
    def assemble_compact_nb(k, u_idx, v_idx, cot, csc, tan_half, n):
        nk = k.shape[0]
        ne = u_idx.shape[0]
        out = np.zeros((nk, n, n), dtype=np.complex128)
        for i in range(nk):
            ki = k[i]
            for j in range(ne):
                u = u_idx[j]
                v = v_idx[j]
                if u == v:
                    out[i, u, u] += 2.0 * ki * tan_half[i, j]
                else:
                    out[i, u, u] -= ki * cot[i, j]
                    out[i, v, v] -= ki * cot[i, j]
                    out[i, u, v] += ki * csc[i, j]
                    out[i, v, u] += ki * csc[i, j]
        return out

    return edge_trig_tables_nb, assemble_compact_nb


def _select_backend():
    flag = os.environ.get("QGSCATTER_NUMBA", "").strip()
    if flag == "0":
        return "numpy", edge_trig_tables_numpy, assemble_compact_numpy
    try:
        tables, assemble = _build_numba()
        return "numba", tables, assemble
    except ImportError:
        if flag == "1":
            raise
        return "numpy", edge_trig_tables_numpy, assemble_compact_numpy


BACKEND, _tables_impl, _assemble_impl = _select_backend()


def edge_trig_tables(k, lengths):
    """Backend-dispatched version of :func:`edge_trig_tables_numpy`."""
    k = np.ascontiguousarray(k, dtype=np.complex128)
    lengths = np.ascontiguousarray(lengths, dtype=np.float64)
    return _tables_impl(k, lengths)


def assemble_compact(k, u_idx, v_idx, cot, csc, tan_half, n):
    """Backend-dispatched version of :func:`assemble_compact_numpy`."""
    k = np.ascontiguousarray(k, dtype=np.complex128)
    u_idx = np.ascontiguousarray(u_idx, dtype=np.int64)
    v_idx = np.ascontiguousarray(v_idx, dtype=np.int64)
    return _assemble_impl(k, u_idx, v_idx, cot, csc, tan_half, n)


def warmup():
    """Trigger JIT compilation (no-op cost on the numpy path)."""
    k = np.array([1.0 + 0.5j, 2j], dtype=np.complex128)
    lengths = np.array([1.0, 2.0])
    u = np.array([0, 1], dtype=np.int64)
    v = np.array([1, 1], dtype=np.int64)
    cot, csc, tan_half, _ = edge_trig_tables(k, lengths)
    assemble_compact(k, u, v, cot, csc, tan_half, 2)
    return BACKEND
