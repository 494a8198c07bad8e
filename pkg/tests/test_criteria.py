"""Threshold searches, regime reports, and their certificates."""
import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import params_with
from nlfront import criteria, eigen, freeboundary as fb


def test_threshold_result_validation():
    with pytest.raises(ValueError):
        criteria.ThresholdResult("ell_sharp", 1.0, (0.9, 1.1), {})
    r = criteria.ThresholdResult("ell_star", 1.0, (0.99998, 1.00002), {"kind": "x"})
    assert r.width_ok
    wide = criteria.ThresholdResult("ell_star", 1.0, (0.5, 1.5), {"kind": "x"})
    assert not wide.width_ok
    d = r.to_dict()
    assert d["name"] == "ell_star" and d["bracket"] == [0.99998, 1.00002]


def test_ell_star_search(p1_d6):
    res = criteria.find_ell_star(p1_d6)
    assert res.name == "ell_star"
    assert abs(res.value - 2.187040) < 5e-6
    assert res.width_ok
    assert abs(res.certificate["at_value"]) < 1e-6
    assert res.certificate["below"] < 0.0 < res.certificate["above"]


def test_ell_star_refusals(p1, vanish_params):
    with pytest.raises(ValueError, match="no threshold, spreading for all h0"):
        criteria.find_ell_star(p1)
    with pytest.raises(ValueError, match="no threshold, vanishing"):
        criteria.find_ell_star(vanish_params)


def test_spreading_just_above_ell_star(p1_d6):
    ell = criteria.find_ell_star(p1_d6).value
    out = fb.classify(params_with(d1=6.0, d2=6.0, h0=1.05 * ell), t_max=200.0)
    assert out.verdict == "spreading"


def test_mu_star_preconditions(p1, p1_d6):
    with pytest.raises(ValueError, match="spreading for all h0"):
        criteria.find_mu_star(p1)
    big_front = params_with(d1=6.0, d2=6.0, h0=3.0)
    with pytest.raises(ValueError, match="threshold undefined"):
        criteria.find_mu_star(big_front)
    with pytest.raises(ValueError, match="map 0 to 0"):
        criteria.find_mu_star(p1_d6, link=lambda m: m + 1.0)
    with pytest.raises(ValueError, match="strictly increasing"):
        criteria.find_mu_star(p1_d6, link=lambda m: -m)


def test_nu1_matches_degenerate_eigenvalue(p1):
    for d2 in (1.0, 5.0, 20.0):
        closed = criteria.nu1(d2, p1)
        lam = eigen.lambda1(p1.h0, replace(p1, d1=0.0, d2=d2))
        assert abs(closed - lam) < 0.05


def test_nu1_decreasing_with_floor(p1):
    vals = [criteria.nu1(d2, p1) for d2 in (1.0, 5.0, 20.0, 200.0, 1000.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert -1.0 < vals[-1] < -0.9  # limit is -a from below never crossed
    with pytest.raises(ValueError, match="d2 must be positive"):
        criteria.nu1(0.0, p1)


def test_d_thresholds_linked(p1):
    rep = criteria.find_d_thresholds(p1, "linked")
    assert rep.mode == "linked"
    assert abs(rep.extras["d1_reproduction"] - 2.0) < 1e-12
    (star,) = rep.thresholds
    assert star.name == "d1_star"
    assert abs(star.value - 5.531624) < 5e-5
    assert star.width_ok
    assert star.certificate["below"] * star.certificate["above"] < 0.0
    probe = replace(p1, d1=star.value, d2=star.value)
    assert abs(eigen.lambda2(p1.h0, probe)) < 1e-6


def test_d_thresholds_small_d2(p1):
    rep = criteria.find_d_thresholds(p1, "fixed_d2_small")  # d2 = 1 < Lambda
    assert abs(rep.extras["d1_reproduction"] - 10.0 / 3.0) < 1e-9
    (hat,) = rep.thresholds
    assert hat.name == "d1_hat"
    assert abs(hat.value - 13.207296) < 5e-5
    assert "front response rates decide" in rep.note


def test_d_thresholds_mid_d2(p1):
    rep = criteria.find_d_thresholds(params_with(d2=10.0), "fixed_d2_mid")
    names = [t.name for t in rep.thresholds]
    assert names == ["d2_under", "d1_tilde"]
    under, tilde = rep.thresholds
    assert abs(under.value - 16.594882) < 5e-5
    assert abs(tilde.value - 2.348771) < 5e-5
    assert tilde.certificate["below"] * tilde.certificate["above"] < 0.0


def test_d_thresholds_large_d2(p1):
    rep = criteria.find_d_thresholds(params_with(d2=20.0), "fixed_d2_large")
    assert "negative for all d1" in rep.note
    assert [d1 for d1, _ in rep.samples] == [0.01, 1.0, 100.0]
    assert all(lam < 0.0 for _, lam in rep.samples)


def test_d_thresholds_mode_mismatch(p1):
    with pytest.raises(ValueError, match="use fixed_d2_small"):
        criteria.find_d_thresholds(p1, "fixed_d2_mid")
    with pytest.raises(ValueError, match="use fixed_d2_mid"):
        criteria.find_d_thresholds(params_with(d2=10.0), "fixed_d2_large")
    with pytest.raises(ValueError, match="use fixed_d2_large"):
        criteria.find_d_thresholds(params_with(d2=20.0), "fixed_d2_small")
    with pytest.raises(ValueError, match="unknown mode"):
        criteria.find_d_thresholds(p1, "fixed")
    with pytest.raises(ValueError, match="reproduction ratio above 1"):
        criteria.find_d_thresholds(
            params_with(a=2.0, b=2.0,
                        nonlinearity=params_with().nonlinearity), "linked")


def test_decision_tree_spreading(p1):
    rep = criteria.decision_tree(p1)
    assert rep["verdict"] == "spreading"
    assert rep["R0"] == 4.0
    assert rep["certificates"][0]["kind"] == "reproduction"
    assert criteria.decision_tree(p1) == rep


def test_decision_tree_vanishing(vanish_params):
    rep = criteria.decision_tree(vanish_params)
    assert rep["verdict"] == "vanishing"
    cert = rep["certificates"][0]
    assert cert["kind"] == "front_bound"
    # tent data integrate exactly; the slow channel caps the excursion
    assert abs(cert["mass_initial"] - 1.25) < 1e-10
    assert abs(cert["h_limit"] - 4.5) < 1e-9


def test_decision_tree_squeeze_regime(p1_d6):
    rep = criteria.decision_tree(p1_d6)
    assert rep["verdict"] == "mu_dependent"
    assert abs(rep["ell_star"] - 2.187040) < 5e-6
    assert rep["certificates"][-1]["quantity"] == "lambda1(h0)"
    assert rep["certificates"][-1]["value"] < 0.0
    wide = criteria.decision_tree(params_with(d1=6.0, d2=6.0, h0=3.0))
    assert wide["verdict"] == "spreading"
    assert wide["certificates"][-1]["value"] > 0.0


def test_decision_tree_schema(p1, p1_d6, vanish_params):
    base = {"verdict", "R0", "Rstar", "gammaA", "gammaB", "thresholds", "certificates"}
    assert set(criteria.decision_tree(p1)) == base
    assert set(criteria.decision_tree(vanish_params)) == base
    assert set(criteria.decision_tree(p1_d6)) == base | {"ell_star"}
