import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from medialmap import cli
from medialmap.cli import REPORT_SCHEMA, main
from medialmap.fields import BinaryMask2, GridSpec, ScalarField2
from medialmap.lowtrans import EnvelopeNotConverged
from medialmap.fileio import (FormatError, field_from_bytes, field_to_bytes, mask_from_pgm, read_field,
                              read_pgm, write_field, write_mask_pgm)


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def pts(tmp_path):
    def make(text, name="k.csv"):
        p = tmp_path / name
        p.write_text(text)
        return p
    return make


def test_edt_single_point_corner(tmp_path, pts):
    out = tmp_path / "d.mmaf"
    assert run("edt", pts("0,0\n"), "--grid", "0,0,1,5,5", "--out", out) == 0
    f = read_field(out)
    assert f.values[4, 4] == 32.0 and f.values[0, 0] == 0.0


def test_malformed_csv_exit_2(tmp_path, pts, capsys):
    assert run("edt", pts("0,0\n1,x\n"), "--grid", "0,0,1,5,5", "--out", tmp_path / "d") == 2
    assert "line 2" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path):
    assert run("edt", tmp_path / "nope.csv", "--grid", "0,0,1,5,5", "--out", tmp_path / "d") == 2


def test_bad_grid_exit_codes(tmp_path, pts):
    k = pts("0,0\n")
    assert run("edt", k, "--grid", "0,0,1,5", "--out", tmp_path / "d") == 2
    assert run("edt", k, "--grid", "0,0,0,5,5", "--out", tmp_path / "d") == 4
    assert run("edt", k, "--out", tmp_path / "d") == 4


def test_empty_set_exit_3(tmp_path, pts):
    assert run("edt", pts("# nothing\n\n"), "--grid", "0,0,1,5,5", "--out", tmp_path / "d") == 3
    blank = tmp_path / "blank.pgm"
    blank.write_bytes(b"P5\n3 2\n255\n" + bytes(6))
    assert run("mam", blank, "--lambda", 1, "--out", tmp_path / "m") == 3


def test_lambda_zero_exit_4(tmp_path, pts):
    assert run("mam", pts("0,0\n"), "--grid", "0,0,1,5,5", "--lambda", 0, "--out", tmp_path / "m") == 4
    assert run("mam", pts("0,0\n"), "--grid", "0,0,1,5,5", "--lambda", -2, "--out", tmp_path / "m") == 4


def test_field_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    f = ScalarField2(GridSpec(-1.25, 3.5, 0.01, 7, 5), rng.normal(size=(5, 7)))
    data = field_to_bytes(f)
    g = field_from_bytes(data)
    assert field_to_bytes(g) == data
    assert np.array_equal(g.values, f.values) and g.spec == f.spec
    header, payload = data.split(b"\n", 1)
    assert json.loads(header)["magic"] == "MMAF1" and len(payload) == 8 * 35


def test_field_file_rejects_garbage():
    for data in (b"", b"{}\n", b'{"magic":"MMAF1","nx":2,"ny":1,"origin_x":0,"origin_y":0,"spacing_h":1}\nabc'):
        with pytest.raises(FormatError):
            field_from_bytes(data)


def test_pgm_mask_edt_round_trip(tmp_path):
    spec = GridSpec(0, 0, 1, 6, 4)
    bits = np.zeros((4, 6), bool)
    bits[0, 1] = bits[3, 5] = True
    p = tmp_path / "m.pgm"
    write_mask_pgm(p, BinaryMask2(spec, bits))
    # Row 0 of the grid (smallest y) is the bottom row of the image.
    assert read_pgm(p)[3, 1] == 255
    assert np.array_equal(mask_from_pgm(p).bits, bits)
    out = tmp_path / "d.mmaf"
    assert run("edt", p, "--out", out) == 0
    first = out.read_bytes()
    write_field(tmp_path / "again.mmaf", read_field(out))
    assert (tmp_path / "again.mmaf").read_bytes() == first
    assert run("edt", p, "--out", out) == 0
    assert out.read_bytes() == first


def test_ascii_pgm_with_comments(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_text("P2\n# a comment\n3 2\n# another\n1\n0 1 0\n0 0 1\n")
    assert mask_from_pgm(p).bits.tolist() == [[False, False, True], [False, True, False]]


def test_mam_two_point_branch_value(tmp_path, pts):
    out = tmp_path / "m.mmaf"
    k = pts("-1,0\n1,0\n")
    assert run("mam", k, "--grid=-3,-0.5,0.001,6001,2501", "--lambda", 1, "--out", out) == 0
    assert abs(read_field(out).at(0, 0.7) - 1.0) <= 5e-3


def test_mam_threshold_keeps_main_branch(tmp_path, pts):
    k = pts("2,1\n2,-1\n-2,1\n-2,-1\n")
    out, mask = tmp_path / "m.mmaf", tmp_path / "k.pgm"
    rc = run("mam", k, "--grid=-3,-3,0.01,601,601", "--lambda", 4, "--out", out,
             "--threshold", 2, "--out-mask", mask, "--render", tmp_path / "r.pgm")
    assert rc == 0
    m = mask_from_pgm(mask, read_field(out).spec)
    X, Y = m.spec.coords()
    centre = (np.abs(X) <= 2) & (np.abs(Y) <= 2)
    sel = m.bits & centre
    assert sel.any()
    assert np.all(np.abs(X[sel]) <= 2 / 5 + 5 * 0.01)
    assert sel[np.abs(Y) > 1].any()
    meta = json.loads((tmp_path / "r.pgm.json").read_text())
    assert meta["min"] == 0.0 and meta["max"] > 4.0


def test_out_mask_needs_threshold(tmp_path, pts):
    assert run("mam", pts("0,0\n"), "--grid", "0,0,1,5,5", "--lambda", 1,
               "--out", tmp_path / "m", "--out-mask", tmp_path / "k.pgm") == 4


def test_envelope_not_converged_exit_4(tmp_path, pts, monkeypatch):
    def stalled(*args, **kwargs):
        raise EnvelopeNotConverged(0.5, 3)
    monkeypatch.setattr(cli, "mam_field", stalled)
    rc = run("mam", pts("-1,0\n1,0\n"), "--grid", "0,0,1,5,5", "--lambda", 1,
             "--backend", "iterative", "--out", tmp_path / "m")
    assert rc == 4


def test_console_entry_point(tmp_path, pts):
    k = pts("0,0\n")
    proc = subprocess.run([sys.executable, "-m", "medialmap", "edt", str(k), "--grid", "0,0,1,5,5",
                           "--out", str(tmp_path / "d")], capture_output=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "medialmap", "bogus"], capture_output=True)
    assert proc.returncode == 2


@pytest.fixture(scope="module")
def broken_backends(tmp_path_factory):
    report = tmp_path_factory.mktemp("v") / "report.json"
    rc = main(["verify", "--suite", "backends", "--iterative-tol", "1e30", "--report", str(report)])
    return rc, json.loads(report.read_text())


def test_verify_broken_iterative_fails(broken_backends):
    rc, rep = broken_backends
    assert rc == 1 and rep["passed"] is False
    agree = [c for c in rep["checks"] if c["name"].startswith("backend_agreement")]
    # One coarse sweep can still land within tolerance at large lambda.
    assert len(agree) == 3 and not all(c["passed"] for c in agree)


def test_report_validates_against_schema(broken_backends):
    _, rep = broken_backends
    jsonschema.validate(rep, REPORT_SCHEMA)
    for c in rep["checks"]:
        assert c["relation"] in ("<=", ">=")


@pytest.fixture(scope="module")
def oracles_report(tmp_path_factory):
    report = tmp_path_factory.mktemp("v") / "report.json"
    rc = main(["verify", "--suite", "oracles", "--seed", "0", "--report", str(report)])
    return rc, json.loads(report.read_text())


def test_verify_exit_code_matches_report(oracles_report):
    rc, rep = oracles_report
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert rep["passed"] == all(c["passed"] for c in rep["checks"])
    assert rc == (0 if rep["passed"] else 1)


def test_verify_oracles_exit_zero(oracles_report):
    rc, rep = oracles_report
    failing = [c["name"] for c in rep["checks"] if not c["passed"]]
    assert rc == 0, f"failing checks: {failing}"
