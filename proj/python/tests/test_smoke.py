import json
import math

import numpy as np
import pytest

import pgfcs


def test_builtin_list():
    names = pgfcs.builtin_names()
    assert "aklt" in names and "period2" in names and "two-component" in names


def test_aklt_spectrum_and_validation():
    m = pgfcs.builtin("aklt")
    assert pgfcs.validate(m)["pass"]
    spec = pgfcs.spectrum(m)
    ev = np.sort_complex(np.asarray(spec["eigenvalues"]))
    assert np.allclose(ev, [-0.5, -0.5, 0.0, 1.0], atol=1e-10)
    assert spec["nu_gap"] == pytest.approx(0.5, abs=1e-10)
    assert spec["components"][0]["period"] == 1


def test_model_round_trip_from_arrays():
    m = pgfcs.builtin("aklt")
    again = pgfcs.Model(m.d_s, m.d_M, np.asarray(m.v), np.asarray(m.sigma), "copy")
    assert pgfcs.validate(again)["pass"]
    with pytest.raises(Exception):
        pgfcs.Model(3, 2, 1.01 * np.asarray(m.v), np.asarray(m.sigma))


def test_qcmi_decays_and_engines_agree():
    m = pgfcs.builtin("aklt")
    r4 = pgfcs.qcmi(m, 1, 4, 1, engine="transfer")
    r8 = pgfcs.qcmi(m, 1, 8, 1, engine="transfer")
    assert r8["qcmi"] < r4["qcmi"] < 0.1
    dense = pgfcs.qcmi(m, 1, 3, 1, engine="dense")
    assert dense["qcmi"] == pytest.approx(pgfcs.qcmi(m, 1, 3, 1)["qcmi"], abs=1e-9)


def test_qmi_plateau():
    exact = 17 * math.log(2) / 16 - 9 * math.log(3) / 8 + 5 * math.log(5) / 16
    assert pgfcs.qmi(pgfcs.builtin("two-component"), 1, 30, 1) == pytest.approx(exact, abs=1e-5)


def test_reduced_state_single_site():
    site = np.asarray(pgfcs.reduced_state(pgfcs.builtin("aklt"), 1, 1, 1, keep="A"))
    assert np.allclose(np.diag(site), [0.25, 0.5, 0.25], atol=1e-12)


def test_markov_report_bounds():
    rep = pgfcs.markov_report(pgfcs.builtin("aklt"), 1, 4, 1, variant="aligned")
    assert abs(rep["qcmi_tilde"]) <= 1e-8
    assert rep["trace_error"] <= 2 * rep["iso_error"] + 1e-8
    assert rep["recovery_petz"] <= 4 * rep["iso_error"] + 1e-8
    assert rep["recovery_structural"] <= 4 * rep["iso_error"] + 1e-8


def test_mps_tensors_gauge():
    ts = pgfcs.mps_tensors(pgfcs.builtin("aklt"))
    acc = sum(np.conj(t.T) @ t for t in (np.asarray(t) for t in ts))
    assert np.allclose(acc, np.eye(2), atol=1e-12)


def test_af_bound_edges():
    full, simplified = pgfcs.af_bound(2.0, 1, 3)
    assert full == pytest.approx(math.log(3) + 2 * math.log(2), abs=1e-12)
    assert simplified >= full


def test_sweep_json_rows():
    out = json.loads(pgfcs.sweep_json("builtin:aklt", 1, 1, 2, 4))
    assert [row["b"] for row in out["rows"]] == [2, 3, 4]
    for row in out["rows"]:
        assert abs(row["qcmi_tilde"]) <= 1e-8
    assert out["violations"] == []
