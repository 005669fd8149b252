import json

import numpy as np
import pytest

from skewnet import algebra as alg
from skewnet import io
from skewnet.algebra import Quaternion
from skewnet.cli import main, run
from skewnet.curves import DiscreteCurve
from skewnet.factor import MatrixPolynomial
from skewnet.lattice import EdgeNet, fill_box

from conftest import rand_quat

I2 = np.eye(2)


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def quad_net(tmp_path, rng):
    net = fill_box(EdgeNet.from_axes([[rand_quat(rng)], [rand_quat(rng)]]))
    return write(tmp_path / "net.json", net.to_json())


def test_verify_quad(quad_net, capsys):
    assert main(["verify", "--net", quad_net]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["exit_code"] == 0
    assert out["checks"]["additive"]["ok"]


def test_verify_broken_quad(tmp_path, rng):
    net = fill_box(EdgeNet.from_axes([[rand_quat(rng)], [rand_quat(rng)]]))
    doc = net.to_json()
    doc["edges"]["1"][-1]["p"] = alg.to_json(Quaternion(5, 0, 0, 0))
    path = write(tmp_path / "bad.json", doc)
    assert main(["verify", "--net", path]) == 3


def test_factor_example(tmp_path):
    p = MatrixPolynomial([I2, [[0, 2], [-2, 0]], -2 * I2]).reversed()
    src = write(tmp_path / "poly.json", p.to_json())
    out = tmp_path / "cube.json"
    assert main(["factor", "--input", src, "--emit", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["degree"] == 2
    assert len(doc["quaternionic"]["factors"]) == 2
    report = json.loads((tmp_path / "cube.json.report.json").read_text())
    assert report["checks"]["path_products"]["ok"]


def test_factor_explicit_pairs(tmp_path):
    p = MatrixPolynomial([I2, [[0, 2], [-2, 0]], -2 * I2]).reversed()
    src = write(tmp_path / "poly.json", p.to_json())
    assert main(["factor", "--input", src, "--pairing", "explicit", "--pairs", "1,1,-1,-1;1,-1,-1,1"]) == 0


def test_malformed_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", "--net", str(bad)]) == 2


def test_missing_file(tmp_path):
    assert main(["verify", "--net", str(tmp_path / "nope.json")]) == 4


def test_config_unknown_field(tmp_path, quad_net):
    cfg = write(tmp_path / "job.json", {"command": "verify", "inputs": {"net": quad_net}, "bogus": 1})
    assert main(["--config", cfg]) == 2
    code, report = run({"command": "verify", "inputs": {"net": quad_net}, "options": {"tol": 1e-9}})
    assert code == 0 and report["exit_code"] == 0


def test_obj_curve_counts(tmp_path):
    curve = DiscreteCurve(Quaternion(), [Quaternion(0, 1, 0, 0), Quaternion(0, 0, 1, 0)])
    src = write(tmp_path / "curve.json", curve.to_json())
    out = tmp_path / "curve.obj"
    assert main(["export", "--input", src, "--emit", str(out)]) == 0
    verts, faces, polys = io.read_obj(out.read_text())
    assert len(verts) == 3 and len(faces) == 0 and len(polys) == 1


def test_obj_patch_counts_and_round_trip(tmp_path, rng):
    pts = rng.normal(size=(3, 3, 3))
    src = write(tmp_path / "patch.json", {"points": pts.tolist()})
    out = tmp_path / "patch.obj"
    assert main(["export", "--input", src, "--emit", str(out)]) == 0
    verts, faces, _ = io.read_obj(out.read_text())
    assert len(verts) == 9 and len(faces) == 4
    assert np.allclose(np.asarray(verts), pts.reshape(-1, 3), rtol=1e-8, atol=1e-9)


def test_export_needs_obj(tmp_path, rng):
    src = write(tmp_path / "patch.json", {"points": rng.normal(size=(2, 2, 3)).tolist()})
    assert main(["export", "--input", src, "--emit", str(tmp_path / "x.json")]) == 2


def test_moutard_random_deterministic(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"m{k}.json"
        assert main(["moutard", "random", "--signature", "3,1", "--kappa", "1", "--extents", "3,3", "--seed", "5",
                     "--emit", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    fam = tmp_path / "fam.json"
    assert main(["moutard", "family", "--net", str(tmp_path / "m0.json"), "--t", "0.4", "--path", "trig",
                 "--emit", str(fam)]) == 0


def test_moutard_complete_negative_vector(capsys):
    code = main(["moutard", "complete", "--f", "1,0,0", "--fi", "0,1,0", "--fj=-1,0,0", "--kappa", "1",
                 "--signature", "3,0"])
    assert code == 0


def test_curve_commands(tmp_path):
    rod = tmp_path / "rod.json"
    assert main(["curve", "elastic", "--E", "0.3,0,0,1", "--bhat0", "1,0,0,0", "--u0", "1,0,0",
                 "--steps", "30", "--emit", str(rod)]) == 0
    assert main(["curve", "elastic-verify", "--curve", str(rod)]) == 0
    assert main(["curve", "backlund", "--curve", str(rod), "--v0", "0.2,0.5,1.7,0.1"]) == 0
    assert main(["curve", "ninvariant", "--E", "1,0,0,1", "--vs", "2,0,1,0", "--steps", "10"]) == 0


def test_surface_dpw(tmp_path):
    from skewnet.surfaces import CrossRatioLattice

    seed = write(tmp_path / "seed.json", CrossRatioLattice.square_grid(3, 3, 2.0).to_json())
    out = tmp_path / "mesh.obj"
    assert main(["surface", "dpw", "--seed", seed, "--mode", "cplus", "--t", "0.3", "--emit", str(out)]) in (0, 3)
    verts, faces, _ = io.read_obj(out.read_text())
    assert len(faces) == (len(verts) ** 0.5 - 1) ** 2
