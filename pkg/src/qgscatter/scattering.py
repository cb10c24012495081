"""Characteristic function, scattering matrices, and the identity suite.

Everything here is rational in the Weyl matrix:

    S(z)      = (M - iI)(M + iI)^{-1}                      (Cayley transform)
    Sigma(z)  = (M - kappa)^{-1} (M* - kappa) (M*)^{-1} M  (full, N x N)
    Sigma_e   = P_e Sigma P_e                              (external block)

where kappa = diag of coupling constants and "M*" denotes the reflected
matrix M_refl(z) = M_c(z) - i k P_e, which coincides with the adjoint
M(s)* on the real axis and continues it analytically elsewhere (see weyl).
For real s and real couplings, Sigma_e is unitary on the external block,
and it factorizes into a kappa-dependent and a kappa-independent piece:

    Sigma_e = [P_e (M-kappa)^{-1}(M*-kappa) P_e] [P_e (M*)^{-1} M P_e].

The chi-form expresses the same operator through S alone,

    (I + chi^-(S-I))^{-1} (I + chi^+(S*-I)) (I+S*)^{-1} (I+S),
    chi^{+-} = (I +- i kappa)/2,

and equals (M+iI) Sigma (M+iI)^{-1} identically.  The weight matrices
I - S*S and I - SS* (true adjoints here) admit the closed forms

    I - S*S = -2i (M*-iI)^{-1} (M - M*) (M+iI)^{-1}
    I - SS* =  2i (M+iI)^{-1} (M* - M) (M*-iI)^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dense import solve_checked
from .errors import NoLeadsError, SingularMatrixError
from .graph import MetricGraph
from .weyl import (
    SpectralPoint,
    as_spectral_point,
    m_full,
    m_full_reflected,
)

__all__ = [
    "ChiPair",
    "ScatteringMatrix",
    "char_function",
    "sigma_full",
    "sigma_external",
    "sigma_chi_form",
    "weight_matrices",
]


@dataclass(frozen=True)
class ChiPair:
    plus: np.ndarray   # (I + i kappa)/2
    minus: np.ndarray  # (I - i kappa)/2

    @classmethod
    def from_couplings(cls, couplings) -> "ChiPair":
        a = np.asarray(couplings, dtype=complex)
        eye = np.eye(a.size, dtype=complex)
        k = np.diag(a)
        return cls((eye + 1j * k) / 2.0, (eye - 1j * k) / 2.0)


@dataclass(frozen=True)
class ScatteringMatrix:
    values: np.ndarray
    z: SpectralPoint
    kind: str  # "full" | "external"
    external_ids: tuple[str, ...] = ()
    kappa_factor: np.ndarray | None = None      # P_e (M-k)^{-1}(M*-k) P_e
    kirchhoff_factor: np.ndarray | None = None  # P_e (M*)^{-1} M P_e

    def __post_init__(self):
        self.values.setflags(write=False)


def _right_solve(b: np.ndarray, a: np.ndarray, what: str) -> np.ndarray:
    """b @ a^{-1} without forming the inverse."""
    return solve_checked(a.T, b.T, what=what).T


def char_function(g: MetricGraph, z) -> np.ndarray:
    """Characteristic function S(z) = (M - iI)(M + iI)^{-1}.

    Contractive (||S|| <= 1) for Im z > 0; also evaluable at real s > 0 as
    the boundary value, which is what the chi-form consumes.
    """
    sp = as_spectral_point(z)
    m = m_full(g, sp).values
    eye = np.eye(m.shape[0], dtype=complex)
    return _right_solve(m - 1j * eye, m + 1j * eye, what="M + iI")


def sigma_full(g: MetricGraph, couplings, z) -> ScatteringMatrix:
    """Full scattering matrix (M-kappa)^{-1}(M*-kappa)(M*)^{-1}M."""
    sp = as_spectral_point(z)
    a = g.couplings if couplings is None else np.asarray(couplings, dtype=complex)
    kap = np.diag(a)
    m = m_full(g, sp).values
    ms = m_full_reflected(g, sp).values
    left = solve_checked(m - kap, ms - kap, what="M - kappa")
    right = solve_checked(ms, m, what="M*")
    return ScatteringMatrix(left @ right, sp, "full")


def sigma_external(g: MetricGraph, couplings, z) -> ScatteringMatrix:
    """External scattering matrix P_e Sigma P_e with its factorization."""
    ext = g.external_indices
    if not ext:
        raise NoLeadsError("graph has no leads; external scattering undefined")
    sp = as_spectral_point(z)
    a = g.couplings if couplings is None else np.asarray(couplings, dtype=complex)
    kap = np.diag(a)
    m = m_full(g, sp).values
    ms = m_full_reflected(g, sp).values
    left = solve_checked(m - kap, ms - kap, what="M - kappa")
    right = solve_checked(ms, m, what="M*")
    idx = np.array(ext, dtype=int)
    block = (left @ right)[np.ix_(idx, idx)]
    return ScatteringMatrix(
        block,
        sp,
        "external",
        external_ids=tuple(g.vertices[i].id for i in ext),
        kappa_factor=left[np.ix_(idx, idx)],
        kirchhoff_factor=right[np.ix_(idx, idx)],
    )


def sigma_chi_form(g: MetricGraph, couplings, z) -> np.ndarray:
    """Scattering operator assembled from S and chi^{+-} alone (N x N).

    Satisfies sigma_chi_form = (M+iI) Sigma (M+iI)^{-1}; at kappa = 0 it
    collapses to the identity.
    """
    sp = as_spectral_point(z)
    a = g.couplings if couplings is None else np.asarray(couplings, dtype=complex)
    chi = ChiPair.from_couplings(a)
    m = m_full(g, sp).values
    ms = m_full_reflected(g, sp).values
    eye = np.eye(m.shape[0], dtype=complex)
    s = _right_solve(m - 1j * eye, m + 1j * eye, what="M + iI")
    # S* continued off the real axis: Cayley data of the reflected matrix.
    s_star = solve_checked(ms - 1j * eye, ms + 1j * eye, what="M* - iI")
    f1 = solve_checked(eye + chi.minus @ (s - eye),
                       eye + chi.plus @ (s_star - eye),
                       what="I + chi^-(S - I)")
    f2 = solve_checked(eye + s_star, eye + s, what="I + S*")
    return f1 @ f2


def weight_matrices(g: MetricGraph, z, check: bool = True, tol: float = 1e-10):
    """(I - S*S, I - SS*) with S* the genuine adjoint.

    With check=True the closed forms through M are evaluated and a
    SingularMatrixError-free consistency assertion at tolerance tol is
    performed; violations raise AssertionError (they would mean a broken
    Cayley transform, not a user error).
    """
    sp = as_spectral_point(z)
    m = m_full(g, sp).values
    eye = np.eye(m.shape[0], dtype=complex)
    s = _right_solve(m - 1j * eye, m + 1j * eye, what="M + iI")
    sh = s.conj().T
    w_left = eye - sh @ s
    w_right = eye - s @ sh
    if check:
        mh = m.conj().T
        ref_left = -2j * solve_checked(mh - 1j * eye, (m - mh), what="M* - iI")
        ref_left = _right_solve(ref_left, m + 1j * eye, what="M + iI")
        ref_right = 2j * solve_checked(m + 1j * eye, (mh - m), what="M + iI")
        ref_right = _right_solve(ref_right, mh - 1j * eye, what="M* - iI")
        scale = max(1.0, float(np.linalg.norm(s)))
        if np.linalg.norm(w_left - ref_left) > tol * scale or \
           np.linalg.norm(w_right - ref_right) > tol * scale:
            raise AssertionError("weight identities violated beyond tolerance")
    return w_left, w_right
