import json

import numpy as np
import pytest

from qgscatter.cli import main
from qgscatter.dataset import (
    ScatteringDataset,
    dataset_from_json,
    dataset_to_csv,
    dataset_to_json,
    geometry_hash,
)
from qgscatter.graph import graph_to_json, with_couplings
from qgscatter.verify import dataset_unitarity

from conftest import make_graph


@pytest.fixture
def graph_file(tmp_path, interval_with_lead):
    path = tmp_path / "g.json"
    path.write_text(json.dumps(graph_to_json(interval_with_lead)))
    return path


class TestDatasetSerialization:
    def test_json_roundtrip(self, ring_with_tail):
        ds = ScatteringDataset(
            graph=ring_with_tail,
            samples=(
                (2.5 + 0j, np.array([[0.1 + 0.2j, 0.3], [0.4, 0.5 - 0.6j]])),
                (-9.0 + 0j, np.eye(2, dtype=complex)),
            ),
            seed=7,
        )
        obj = dataset_to_json(ds)
        back = dataset_from_json(obj)
        assert back.graph == ring_with_tail
        assert back.seed == 7
        for (z1, m1), (z2, m2) in zip(ds.samples, back.samples):
            assert z1 == z2 and np.array_equal(m1, m2)

    def test_schema_shape(self, ring_with_tail):
        ds = ScatteringDataset(graph=ring_with_tail, samples=((4.0 + 0j, np.eye(2, dtype=complex)),))
        obj = dataset_to_json(ds)
        assert obj["samples"][0]["z"] == [4.0, 0.0]
        assert obj["samples"][0]["sigma"][0][0] == [1.0, 0.0]

    def test_hash_string_graph(self, ring_with_tail):
        h = geometry_hash(ring_with_tail)
        ds = ScatteringDataset(graph=h, samples=())
        assert ds.geometry_hash() == h

    def test_geometry_hash_ignores_couplings(self, ring_with_tail):
        g2 = with_couplings(ring_with_tail, np.zeros(4))
        assert geometry_hash(g2) == geometry_hash(ring_with_tail)

    def test_csv_layout_and_real_grid_guard(self):
        g = make_graph([("1", 0, 1)], [])
        ds = ScatteringDataset(graph=g, samples=((4.0 + 0j, np.array([[0.5 - 0.25j]])),))
        text = dataset_to_csv(ds)
        lines = text.strip().splitlines()
        assert lines[0] == "s,re_0_0,im_0_0"
        assert lines[1] == "4,0.5,-0.25"
        bad = ScatteringDataset(graph=g, samples=((1 + 1j, np.eye(1, dtype=complex)),))
        with pytest.raises(Exception):
            dataset_to_csv(bad)


class TestCliForward:
    def test_forward_writes_dataset_and_csv(self, graph_file, tmp_path):
        out = tmp_path / "ds.json"
        code = main([
            "forward", "--graph", str(graph_file),
            "--grid", "2:90:5", "--out", str(out),
        ])
        assert code == 0
        obj = json.loads(out.read_text())
        assert len(obj["samples"]) == 5
        assert (tmp_path / "ds.csv").exists()

    def test_forward_deterministic_bytes(self, graph_file, tmp_path):
        o1, o2 = tmp_path / "a.json", tmp_path / "b.json"
        for o in (o1, o2):
            assert main([
                "forward", "--graph", str(graph_file), "--grid", "2:90:6",
                "--tau-grid", "3:10:4", "--seed", "5", "--out", str(o),
            ]) == 0
        assert o1.read_bytes() == o2.read_bytes()

    def test_dirichlet_grid_point_exits_2(self, tmp_path):
        g = make_graph([("1", 0.5, 1), ("2", 0.1, 0)], [("e", "1", "2", np.pi)])
        gf = tmp_path / "gpi.json"
        gf.write_text(json.dumps(graph_to_json(g)))
        # s = (m pi / l)^2 = m^2 exactly on the grid
        code = main([
            "forward", "--graph", str(gf), "--grid", "1:4:2",
            "--out", str(tmp_path / "x.json"),
        ])
        assert code == 2

    def test_invalid_graph_exits_1(self, tmp_path):
        gf = tmp_path / "bad.json"
        gf.write_text(json.dumps({
            "vertices": [{"id": "1", "coupling": [0, 0], "lead": 2}],
            "edges": [],
        }))
        code = main([
            "forward", "--graph", str(gf), "--grid", "1:4:2",
            "--out", str(tmp_path / "x.json"),
        ])
        assert code == 1

    def test_kappa_zero_grid_identity(self, tmp_path):
        g = make_graph([("1", 0.0, 1), ("2", 0.0, 1)], [("e", "1", "2", 1.0)])
        gf = tmp_path / "g0.json"
        gf.write_text(json.dumps(graph_to_json(g)))
        out = tmp_path / "d0.json"
        assert main(["forward", "--graph", str(gf), "--grid", "2:50:5", "--out", str(out)]) == 0
        ds = dataset_from_json(json.loads(out.read_text()))
        for _, m in ds.samples:
            assert np.linalg.norm(m - np.eye(2)) < 1e-12

    def test_scalar_grid_closed_form(self, tmp_path):
        g = make_graph([("1", 1.25, 1)], [])
        gf = tmp_path / "gs.json"
        gf.write_text(json.dumps(graph_to_json(g)))
        out = tmp_path / "dss.json"
        assert main(["forward", "--graph", str(gf), "--grid", "1:100:5", "--out", str(out)]) == 0
        ds = dataset_from_json(json.loads(out.read_text()))
        for z, m in ds.samples:
            k = np.sqrt(z.real)
            assert m[0, 0] == pytest.approx((1j * k + 1.25) / (1j * k - 1.25), rel=1e-12)


class TestCliInvert:
    def _forward(self, graph_file, tmp_path, **kw):
        out = tmp_path / "ds.json"
        assert main([
            "forward", "--graph", str(graph_file),
            "--grid", "2:60:8", "--tau-grid", "2.5:9:8", "--out", str(out),
        ] + list(kw.get("extra", []))) == 0
        return out

    def test_roundtrip_exit_0(self, graph_file, tmp_path):
        ds = self._forward(graph_file, tmp_path)
        rep = tmp_path / "rep.json"
        code = main(["invert", "--graph", str(graph_file), "--data", str(ds), "--out", str(rep)])
        assert code == 0
        obj = json.loads(rep.read_text())
        assert np.allclose(obj["couplings"], [1.5, -0.7], atol=1e-6)
        assert obj["converged"] is True

    def test_hash_mismatch_exit_1(self, graph_file, tmp_path, two_lead_interval):
        ds = self._forward(graph_file, tmp_path)
        other = tmp_path / "other.json"
        other.write_text(json.dumps(graph_to_json(two_lead_interval)))
        code = main(["invert", "--graph", str(other), "--data", str(ds), "--out", str(tmp_path / "r.json")])
        assert code == 1

    def test_truncated_dataset_exit_1(self, graph_file, tmp_path):
        ds_path = self._forward(graph_file, tmp_path)
        obj = json.loads(ds_path.read_text())
        obj["samples"] = obj["samples"][:1]
        ds_path.write_text(json.dumps(obj))
        code = main(["invert", "--graph", str(graph_file), "--data", str(ds_path), "--out", str(tmp_path / "r.json")])
        assert code == 1


class TestCliContract:
    def test_contract_roundtrip_fixture(self, tmp_path):
        g = make_graph(
            [("1", 1.0, 0), ("2", 2.0, 1)],
            [("e1", "1", "2", 1.0), ("e2", "1", "2", 0.5)],
        )
        gf = tmp_path / "g.json"
        gf.write_text(json.dumps(graph_to_json(g)))
        out = tmp_path / "gc.json"
        assert main(["contract", "--graph", str(gf), "--edge", "e1", "--out", str(out)]) == 0
        obj = json.loads(out.read_text())
        assert len(obj["vertices"]) == 1
        assert obj["vertices"][0]["coupling"] == [3.0, 0.0]
        (loop,) = obj["edges"]
        assert loop["u"] == loop["v"] and loop["length"] == 0.5

    def test_contract_loop_exit_1(self, tmp_path):
        g = make_graph([("1", 0, 1)], [("l", "1", "1", 1.0)])
        gf = tmp_path / "g.json"
        gf.write_text(json.dumps(graph_to_json(g)))
        assert main(["contract", "--graph", str(gf), "--edge", "l", "--out", str(tmp_path / "o.json")]) == 1


class TestCliVerifyAndRoundtrip:
    def test_verify_passes_with_default_seed(self, tmp_path, capsys):
        out = tmp_path / "verify.json"
        code = main(["verify", "--seed", "0", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert all(rec["passed"] for rec in payload)

    def test_corrupted_dataset_fails_unitarity(self, graph_file, tmp_path):
        ds_path = tmp_path / "ds.json"
        assert main([
            "forward", "--graph", str(graph_file), "--grid", "2:60:8", "--out", str(ds_path),
        ]) == 0
        obj = json.loads(ds_path.read_text())
        obj["samples"][0]["sigma"][0][0] = [5.0, 5.0]  # corrupt one entry
        ds_path.write_text(json.dumps(obj))
        code = main(["verify", "--seed", "0", "--data", str(ds_path)])
        assert code == 4
        ds = dataset_from_json(json.loads(ds_path.read_text()))
        assert not dataset_unitarity(ds).passed

    def test_roundtrip_command(self, graph_file):
        code = main([
            "roundtrip", "--graph", str(graph_file),
            "--grid", "2:60:8", "--tau-grid", "2.5:9:8",
        ])
        assert code == 0

    def test_grid_excludes_zero_and_validates(self, graph_file, tmp_path):
        code = main([
            "forward", "--graph", str(graph_file), "--grid", "0:0:1",
            "--out", str(tmp_path / "x.json"),
        ])
        assert code == 1
        code = main([
            "forward", "--graph", str(graph_file), "--grid", "1:2:0",
            "--out", str(tmp_path / "x.json"),
        ])
        assert code == 1

    def test_log_grid(self, graph_file, tmp_path):
        out = tmp_path / "log.json"
        assert main([
            "forward", "--graph", str(graph_file), "--grid", "log:1:100:5", "--out", str(out),
        ]) == 0
        ds = dataset_from_json(json.loads(out.read_text()))
        ss = [z.real for z, _ in ds.samples]
        assert ss[0] == pytest.approx(1.0) and ss[-1] == pytest.approx(100.0)
        ratios = [b / a for a, b in zip(ss, ss[1:])]
        assert np.allclose(ratios, ratios[0])
