"""Weyl M-matrix of a metric graph and the Robin-to-Dirichlet map.

For the compact part, the M-matrix at spectral parameter z with k = sqrt(z),
Im k >= 0, has entries

    m_jj = -k ( sum_{non-loop edges at V_j} cot(k l_p)
                - 2 sum_{loops at V_j} tan(k l_p / 2) )
    m_jk =  k   sum_{edges between V_j and V_k} 1 / sin(k l_p)     (j != k)

and 0 for non-adjacent pairs; empty sums are 0, so a vertex without compact
edges contributes a zero row and column.  Attaching a semi-infinite lead to
a vertex adds i*k to its diagonal entry:

    M(z) = M_c(z) + i k P_e,

with P_e the 0/1 diagonal projection onto vertices carrying a lead.

The matrix-valued function M is complex symmetric (M^T = M), satisfies
M(conj z) = conj(M(z)), and is Herglotz: Im M(z) > 0 for Im z > 0.

The reflected matrix

    M_refl(z) = M_c(z) - i k P_e

is the Schwarz reflection of M across the positive half-line: for real s > 0
it equals the adjoint M(s)* (M_c(s) is then real symmetric), and it is the
analytic continuation of s -> M(s)* to complex z.  The scattering formulas
use M_refl wherever the adjoint appears, which is what makes them evaluable
(and exactly consistent) at z = -tau**2.

Evaluations refuse spectral points where some edge has |sin(k l)| below
SIN_TOL: these are genuine poles of M (edge Dirichlet spectrum); resample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .dense import COND_CAP, cond2, solve_checked
from .errors import (
    SingularMatrixError,
    SpectralSingularityError,
    ZeroEnergyError,
)
from .graph import MetricGraph

SIN_TOL = 1e-12

__all__ = [
    "SIN_TOL",
    "SpectralPoint",
    "WeylMatrix",
    "sqrt_upper",
    "as_spectral_point",
    "lead_projection",
    "m_compact",
    "m_compact_grid",
    "m_full",
    "m_full_reflected",
    "rtd_map",
    "resolvent_norm_probe",
]


def sqrt_upper(z: complex) -> complex:
    """Square root with Im k >= 0; positive real for positive real z."""
    k = np.sqrt(complex(z))
    if k.imag < 0 or (k.imag == 0 and k.real < 0):
        k = -k
    return complex(k)


@dataclass(frozen=True)
class SpectralPoint:
    """A spectral parameter z together with its branch root k = sqrt(z)."""

    z: complex
    k: complex

    def __post_init__(self):
        if self.k.imag < 0:
            raise ValueError("SpectralPoint requires Im k >= 0")
        scale = max(abs(self.z), 1.0)
        if abs(self.k * self.k - self.z) > 1e-14 * scale:
            raise ValueError("SpectralPoint requires k**2 == z")

    @classmethod
    def from_z(cls, z: complex) -> "SpectralPoint":
        z = complex(z)
        return cls(z, sqrt_upper(z))

    @classmethod
    def from_tau(cls, tau: float) -> "SpectralPoint":
        """The point z = -tau**2 on the negative half-line (k = i tau)."""
        tau = float(tau)
        if tau <= 0:
            raise ValueError("tau must be positive")
        return cls(complex(-tau * tau), complex(0.0, tau))


def as_spectral_point(z) -> SpectralPoint:
    if isinstance(z, SpectralPoint):
        return z
    return SpectralPoint.from_z(z)


@dataclass(frozen=True)
class WeylMatrix:
    values: np.ndarray
    z: SpectralPoint
    kind: str  # "compact" | "full" | "full_reflected"

    def __post_init__(self):
        self.values.setflags(write=False)


def lead_projection(g: MetricGraph) -> np.ndarray:
    """P_e as a dense 0/1 diagonal matrix in vertex order."""
    p = np.zeros((g.n_vertices, g.n_vertices), dtype=complex)
    for i in g.external_indices:
        p[i, i] = 1.0
    return p


# ---------------------------------------------------------------------------
# compact-part assembly
# ---------------------------------------------------------------------------

def m_compact_grid(g: MetricGraph, zs) -> tuple[np.ndarray, np.ndarray]:
    """Batched compact M-matrices for an array of spectral points.

    Returns (values, ok) with values of shape (nz, N, N) and a boolean mask
    flagging points that pass the singularity screen (z != 0 and
    |sin(k l)| >= SIN_TOL on every edge).  Rows with ok=False contain
    whatever the kernel produced and must not be used.
    """
    zs = np.asarray(zs, dtype=complex).ravel()
    ks = np.array([sqrt_upper(z) for z in zs], dtype=complex)
    n = g.n_vertices
    if len(g.edges) == 0:
        vals = np.zeros((zs.size, n, n), dtype=complex)
        return vals, zs != 0
    u_idx, v_idx = g.edge_index_arrays()
    cot, csc, tan_half, sin_abs = kernels.edge_trig_tables(ks, g.lengths)
    vals = kernels.assemble_compact(ks, u_idx, v_idx, cot, csc, tan_half, n)
    # M_c is exactly real symmetric for real z (any sign: trig for z > 0,
    # hyperbolic for z < 0); drop the roundoff imaginary part there so that
    # downstream identities (M - M* = 2i k P_e, real RtD below the
    # spectrum) hold to machine precision.
    real_rows = zs.imag == 0.0
    if np.any(real_rows):
        vals[real_rows] = vals[real_rows].real
    ok = (zs != 0) & np.all(sin_abs >= SIN_TOL, axis=1)
    return vals, ok


def _compact_values(g: MetricGraph, sp: SpectralPoint) -> np.ndarray:
    if sp.z == 0:
        raise ZeroEnergyError("z = 0 is excluded (cot singular)")
    vals, ok = m_compact_grid(g, [sp.z])
    if not ok[0]:
        raise SpectralSingularityError(
            f"z = {sp.z} is within {SIN_TOL:g} of the Dirichlet spectrum of an edge",
            z=sp.z,
        )
    return vals[0]


def m_compact(g: MetricGraph, z) -> WeylMatrix:
    """Compact-part Weyl matrix M_c(z)."""
    sp = as_spectral_point(z)
    return WeylMatrix(_compact_values(g, sp), sp, "compact")


def m_full(g: MetricGraph, z) -> WeylMatrix:
    """Full Weyl matrix M(z) = M_c(z) + i k P_e."""
    sp = as_spectral_point(z)
    vals = _compact_values(g, sp)
    for i in g.external_indices:
        vals[i, i] += 1j * sp.k
    return WeylMatrix(vals, sp, "full")


def m_full_reflected(g: MetricGraph, z) -> WeylMatrix:
    """Reflected matrix M_c(z) - i k P_e (equals M(s)* on the real axis)."""
    sp = as_spectral_point(z)
    vals = _compact_values(g, sp)
    for i in g.external_indices:
        vals[i, i] -= 1j * sp.k
    return WeylMatrix(vals, sp, "full_reflected")


# ---------------------------------------------------------------------------
# Robin-to-Dirichlet map
# ---------------------------------------------------------------------------

def _coupling_matrix(g: MetricGraph, couplings) -> np.ndarray:
    a = g.couplings if couplings is None else np.asarray(couplings, dtype=complex)
    if a.shape != (g.n_vertices,):
        raise ValueError(f"coupling vector must have shape ({g.n_vertices},)")
    return np.diag(a)


def rtd_map(g: MetricGraph, couplings, subset, z) -> np.ndarray:
    """Robin-to-Dirichlet block of a vertex subset.

    Returns the subset-indexed block of (M_c(z) - kappa)^{-1}, with rows and
    columns ordered as the subset iterable.  couplings=None uses the graph's
    own coupling constants.
    """
    sp = as_spectral_point(z)
    a = _coupling_matrix(g, couplings)
    mc = _compact_values(g, sp)
    idx = np.array([g.index(v) for v in subset], dtype=int)
    resolvent = solve_checked(
        mc - a,
        np.eye(g.n_vertices, dtype=complex),
        what="M_c - kappa",
    )
    return resolvent[np.ix_(idx, idx)]


def resolvent_norm_probe(g: MetricGraph, couplings, z) -> float:
    """Operator norm of (M_c(z) - kappa)^{-1}; +inf when singular.

    Unlike rtd_map this never raises on near-singularity: blow-up is the
    signal (it locates the spectrum of the delta-coupled compact Laplacian).
    The edge-Dirichlet screen is also skipped; entries of M_c may be huge
    but remain finite in float arithmetic.
    """
    sp = as_spectral_point(z)
    if sp.z == 0:
        raise ZeroEnergyError("z = 0 is excluded (cot singular)")
    vals, _ = m_compact_grid(g, [sp.z])
    a = _coupling_matrix(g, couplings)
    m = vals[0] - a
    if m.size == 0 or not np.all(np.isfinite(m)):
        return np.inf
    smin = np.linalg.svd(m, compute_uv=False)[-1]
    if smin == 0.0:
        return np.inf
    return float(1.0 / smin)
