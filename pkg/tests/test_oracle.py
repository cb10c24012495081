import numpy as np
import pytest

from qgscatter.errors import InsufficientDataError
from qgscatter.oracle import (
    compact_eigenvalues,
    planewave_classical,
    planewave_scattering,
    planewave_with_retry,
    secular_determinant,
    synth_dataset,
)
from qgscatter.scattering import sigma_external
from qgscatter.weyl import m_compact_grid, resolvent_norm_probe
from qgscatter.inverse import recover_couplings

from conftest import make_graph


class TestPlaneWave:
    def test_scalar_reflection_closed_form(self):
        g = make_graph([("1", 0, 1)], [])
        for a, s in ((2.0, 4.0), (-0.8, 12.5), (3.3, 0.7)):
            k = np.sqrt(s)
            want = (a + 1j * k) / (1j * k - a)
            assert planewave_scattering(g, [a], s)[0, 0] == pytest.approx(want, rel=1e-12)
            assert planewave_classical(g, [a], s)[0, 0] == pytest.approx(want, rel=1e-12)

    def test_neumann_full_reflection(self):
        g = make_graph([("1", 0, 1)], [])
        assert planewave_classical(g, [0.0], 4.0)[0, 0] == pytest.approx(1.0)

    def test_classical_kirchhoff_background(self, two_lead_interval):
        # kappa = 0 classical matrix is pure transmission with phase e^{ikl}
        s = 7.3
        k = np.sqrt(s)
        s0 = planewave_classical(two_lead_interval, [0.0, 0.0], s)
        assert s0[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert s0[0, 1] == pytest.approx(np.exp(1j * k), rel=1e-12)

    def test_pair_matrix_identity_at_kappa_zero(self, two_lead_interval):
        s0 = planewave_scattering(two_lead_interval, [0.0, 0.0], 7.3)
        assert np.linalg.norm(s0 - np.eye(2)) < 1e-12

    def test_unitarity_and_equivalence(self, ring_with_tail, rng):
        a = ring_with_tail.couplings.real
        checked = 0
        while checked < 15:
            s = float(rng.uniform(0.5, 70))
            _, ok = m_compact_grid(ring_with_tail, [s])
            if not ok[0]:
                continue
            checked += 1
            pw = planewave_scattering(ring_with_tail, a, s)
            assert np.linalg.norm(pw.conj().T @ pw - np.eye(2)) < 1e-12
            se = sigma_external(ring_with_tail, a, s).values
            assert np.linalg.norm(pw - se) < 1e-10

    def test_two_lead_fixture_equivalence(self, two_lead_interval):
        a = [1.7, -2.3]
        for s in (3.1, 7.3, 29.9):
            pw = planewave_scattering(two_lead_interval, a, s)
            se = sigma_external(two_lead_interval, a, s).values
            assert np.linalg.norm(pw - se) < 1e-10

    def test_retry_helper_returns_usable_energy(self, two_lead_interval):
        s_used, mat = planewave_with_retry(two_lead_interval, [1.0, 1.0], 5.5)
        assert s_used >= 5.5 and np.all(np.isfinite(mat))


class TestCompactEigenvalues:
    def test_neumann_interval(self):
        g = make_graph([("1", 0, 0), ("2", 0, 0)], [("e", "1", "2", np.pi)])
        ev = compact_eigenvalues(g, [0.0, 0.0], (-1.0, 10.0))
        assert np.allclose(ev, [0.0, 1.0, 4.0, 9.0], atol=1e-9)

    def test_dirichlet_limit_proxy(self):
        g = make_graph([("1", 0, 0), ("2", 0, 0)], [("e", "1", "2", np.pi)])
        ev = compact_eigenvalues(g, [1e8, 1e8], (0.5, 10.0))
        assert len(ev) == 3
        for m, e in zip((1, 2, 3), ev):
            assert abs(e - m * m) < 1e-6  # shifted O(1e-8) * slope

    def test_tunneling_split_pair_found(self):
        g = make_graph([("1", 0, 0), ("2", 0, 0)], [("e", "1", "2", np.pi)])
        ev = compact_eigenvalues(g, [-3.0, -3.0], (-15.0, 2.0))
        neg = [e for e in ev if e < 0]
        assert len(neg) == 2
        assert neg[0] == pytest.approx(-9.002901, abs=1e-5)
        assert neg[1] == pytest.approx(-8.997091, abs=1e-5)

    def test_pole_confirmation(self):
        g = make_graph(
            [("1", 0.5, 0), ("2", -1.1, 0), ("3", 2.0, 0)],
            [("a", "1", "2", 1.0), ("b", "2", "3", np.sqrt(2.0)), ("c", "1", "3", np.e / 2)],
        )
        ev = compact_eigenvalues(g, None, (-10.0, 30.0))
        assert ev
        for e in ev:
            assert resolvent_norm_probe(g, None, e + 1e-8j) > 1e6

    def test_agrees_with_rtd_blowup(self):
        # eigenvalues coincide with blow-up z of the RtD resolvent to 1e-8
        g = make_graph([("1", 1.3, 0), ("2", -0.4, 0)], [("e", "1", "2", 1.0)])
        ev = compact_eigenvalues(g, None, (0.2, 40.0))
        for e in ev:
            lo = resolvent_norm_probe(g, None, e - 1e-8 + 0j if e > 0.2 + 1e-8 else e + 0j)
            hi = resolvent_norm_probe(g, None, e + 1e-8j)
            assert hi > 1e5 and np.isfinite(lo)

    def test_empty_interval_and_no_edges(self):
        g = make_graph([("1", 0, 1)], [])
        assert compact_eigenvalues(g, [0.0], (0.0, 10.0)) == []

    def test_secular_sign_structure(self):
        g = make_graph([("1", 0, 0), ("2", 0, 0)], [("e", "1", "2", np.pi)])
        v_below = secular_determinant(g, [0.0, 0.0], 0.5)
        v_above = secular_determinant(g, [0.0, 0.0], 1.5)
        assert v_below * v_above < 0


class TestSynthDataset:
    def test_bit_reproducible_with_seed(self, ring_with_tail):
        zs = [2.0, 6.0, -4.0, -25.0]
        a = ring_with_tail.couplings.real
        d1 = synth_dataset(ring_with_tail, a, zs, noise_level=1e-6, seed=42)
        d2 = synth_dataset(ring_with_tail, a, zs, noise_level=1e-6, seed=42)
        for (z1, m1), (z2, m2) in zip(d1.samples, d2.samples):
            assert z1 == z2 and np.array_equal(m1, m2)

    def test_noise_scale(self, ring_with_tail):
        zs = [2.0, 6.0, 11.0]
        a = ring_with_tail.couplings.real
        clean = synth_dataset(ring_with_tail, a, zs, noise_level=0.0, seed=1)
        noisy = synth_dataset(ring_with_tail, a, zs, noise_level=1e-4, seed=1)
        for (_, mc), (_, mn) in zip(clean.samples, noisy.samples):
            rel = np.linalg.norm(mn - mc) / np.linalg.norm(mc)
            assert 1e-6 < rel < 1e-2

    def test_empty_samples_insufficient_downstream(self, ring_with_tail):
        ds = synth_dataset(ring_with_tail, ring_with_tail.couplings.real, [])
        with pytest.raises(InsufficientDataError):
            recover_couplings(ds, ring_with_tail)
