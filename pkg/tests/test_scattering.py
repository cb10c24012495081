import numpy as np
import pytest

from qgscatter.errors import NoLeadsError
from qgscatter.scattering import (
    ChiPair,
    char_function,
    sigma_chi_form,
    sigma_external,
    sigma_full,
    weight_matrices,
)
from qgscatter.weyl import lead_projection, m_compact_grid, m_full, m_full_reflected

from conftest import make_graph


class TestChiPair:
    def test_sum_is_identity(self, rng):
        a = rng.uniform(-5, 5, 4)
        chi = ChiPair.from_couplings(a)
        assert np.allclose(chi.plus + chi.minus, np.eye(4))
        assert np.allclose(chi.plus, (np.eye(4) + 1j * np.diag(a)) / 2)


class TestCharFunction:
    def test_scalar_zero_at_matching_point(self, lead_only_vertex):
        # M = i sqrt(z) = i at z = 1: numerator vanishes
        g = make_graph([("1", 0, 1)], [])
        assert char_function(g, 1.0)[0, 0] == pytest.approx(0.0, abs=1e-15)

    def test_contractive_on_upper_halfplane(self, ring_with_tail, rng):
        count = 0
        while count < 200:
            z = complex(rng.uniform(-10, 60), rng.uniform(1e-2, 10))
            _, ok = m_compact_grid(ring_with_tail, [z])
            if not ok[0]:
                continue
            count += 1
            s = char_function(ring_with_tail, z)
            assert np.linalg.norm(s, 2) <= 1 + 1e-12


def _admissible_s(g, rng, count, lo=0.5, hi=80.0):
    out = []
    while len(out) < count:
        s = float(rng.uniform(lo, hi))
        _, ok = m_compact_grid(g, [s])
        if ok[0]:
            out.append(s)
    return out


class TestSigma:
    def test_kappa_zero_identity(self, ring_with_tail, rng):
        zero = np.zeros(4)
        for s in _admissible_s(ring_with_tail, rng, 20):
            sig = sigma_full(ring_with_tail, zero, s).values
            assert np.linalg.norm(sig - np.eye(4)) < 1e-12

    def test_scalar_closed_form(self):
        g = make_graph([("1", 0, 1)], [])
        for a, s in ((2.0, 4.0), (-1.3, 9.0), (0.7, 0.3)):
            k = np.sqrt(s)
            want = (1j * k + a) / (1j * k - a)
            assert sigma_full(g, [a], s).values[0, 0] == pytest.approx(want, rel=1e-13)
            assert sigma_external(g, [a], s).values[0, 0] == pytest.approx(want, rel=1e-13)

    def test_scalar_minus_i_example(self):
        g = make_graph([("1", 0, 1)], [])
        assert sigma_external(g, [2.0], 4.0).values[0, 0] == pytest.approx(-1j)

    def test_unitarity_and_det(self, ring_with_tail, rng):
        a = ring_with_tail.couplings.real
        eye = np.eye(2)
        for s in _admissible_s(ring_with_tail, rng, 50):
            se = sigma_external(ring_with_tail, a, s).values
            assert np.linalg.norm(se.conj().T @ se - eye) < 1e-10
            assert abs(abs(np.linalg.det(se)) - 1) < 1e-10

    def test_kappa_factor_unitary(self, ring_with_tail, rng):
        a = ring_with_tail.couplings.real
        for s in _admissible_s(ring_with_tail, rng, 20):
            kf = sigma_external(ring_with_tail, a, s).kappa_factor
            assert np.linalg.norm(kf.conj().T @ kf - np.eye(2)) < 1e-10

    def test_factorization(self, ring_with_tail, rng):
        a = ring_with_tail.couplings.real
        for s in _admissible_s(ring_with_tail, rng, 20):
            se = sigma_external(ring_with_tail, a, s)
            assert np.linalg.norm(se.kappa_factor @ se.kirchhoff_factor - se.values) < 1e-10

    def test_triple_star_identity(self, ring_with_tail, rng):
        # (M-k)^{-1}(M*-k) = I - 2i sqrt(s) (M-k)^{-1} P_e at real s
        a = ring_with_tail.couplings.real
        kap = np.diag(a.astype(complex))
        pe = lead_projection(ring_with_tail)
        eye = np.eye(4)
        for s in _admissible_s(ring_with_tail, rng, 20):
            m = m_full(ring_with_tail, s).values
            ms = m_full_reflected(ring_with_tail, s).values
            lhs = np.linalg.solve(m - kap, ms - kap)
            rhs = eye - 2j * np.sqrt(s) * np.linalg.solve(m - kap, pe)
            assert np.linalg.norm(lhs - rhs) < 1e-12 * max(1, np.linalg.norm(lhs))

    def test_no_leads_raises(self):
        g = make_graph([("1", 0, 0), ("2", 0, 0)], [("e", "1", "2", 1.0)])
        with pytest.raises(NoLeadsError):
            sigma_external(g, [0.0, 0.0], 4.0)

    def test_complex_z_permitted(self, ring_with_tail):
        sig = sigma_full(ring_with_tail, ring_with_tail.couplings.real, 2 + 1j)
        assert np.all(np.isfinite(sig.values))


class TestChiForm:
    def test_kappa_zero_collapses_to_identity(self, ring_with_tail, rng):
        for s in _admissible_s(ring_with_tail, rng, 10):
            chi = sigma_chi_form(ring_with_tail, np.zeros(4), s)
            assert np.linalg.norm(chi - np.eye(4)) < 1e-11

    def test_scalar_matches_sigma(self):
        g = make_graph([("1", 0, 1)], [])
        a, s = 1.9, 6.3
        k = np.sqrt(s)
        val = sigma_chi_form(g, [a], s)[0, 0]
        assert val == pytest.approx((k - 1j * a) / (k + 1j * a), rel=1e-12)
        assert val == pytest.approx((1j * k + a) / (1j * k - a), rel=1e-12)

    def test_conjugation_identity_sweep(self, ring_with_tail, rng):
        a = ring_with_tail.couplings.real
        eye = np.eye(4)
        for s in _admissible_s(ring_with_tail, rng, 25):
            m = m_full(ring_with_tail, s).values
            chi = sigma_chi_form(ring_with_tail, a, s)
            sig = sigma_full(ring_with_tail, a, s).values
            ref = (m + 1j * eye) @ sig @ np.linalg.inv(m + 1j * eye)
            assert np.linalg.norm(chi - ref) < 1e-10


class TestWeights:
    def test_lead_free_weights_vanish(self):
        g = make_graph([("1", 0, 0), ("2", 0, 0)], [("e", "1", "2", 1.0)])
        wl, wr = weight_matrices(g, 3.1)
        assert np.linalg.norm(wl) < 1e-13 and np.linalg.norm(wr) < 1e-13

    def test_rank_bounded_by_lead_count(self, ring_with_tail):
        wl, _ = weight_matrices(ring_with_tail, 6.6)
        svals = np.linalg.svd(wl, compute_uv=False)
        assert np.sum(svals > 1e-10) <= 2

    def test_positive_semidefinite_upper_halfplane(self, ring_with_tail, rng):
        count = 0
        while count < 30:
            z = complex(rng.uniform(0.5, 40), rng.uniform(0.05, 8))
            _, ok = m_compact_grid(ring_with_tail, [z])
            if not ok[0]:
                continue
            count += 1
            wl, wr = weight_matrices(ring_with_tail, z)
            assert np.linalg.eigvalsh((wl + wl.conj().T) / 2)[0] > -1e-12
            assert np.linalg.eigvalsh((wr + wr.conj().T) / 2)[0] > -1e-12

    def test_closed_forms(self, ring_with_tail, rng):
        # I - S*S = -2i (M*-i)^{-1}(M-M*)(M+i)^{-1} and its mirror
        eye = np.eye(4)
        for s in _admissible_s(ring_with_tail, rng, 15):
            m = m_full(ring_with_tail, s).values
            mh = m.conj().T
            s_mat = char_function(ring_with_tail, s)
            wl, wr = weight_matrices(ring_with_tail, s)
            ref_l = -2j * np.linalg.solve(mh - 1j * eye, m - mh) @ np.linalg.inv(m + 1j * eye)
            ref_r = 2j * np.linalg.solve(m + 1j * eye, mh - m) @ np.linalg.inv(mh - 1j * eye)
            assert np.linalg.norm(wl - ref_l) < 1e-12 * max(1, np.linalg.norm(s_mat))
            assert np.linalg.norm(wr - ref_r) < 1e-12 * max(1, np.linalg.norm(s_mat))
