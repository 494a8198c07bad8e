"""Principal eigenvalue solver: anchors, comparison bounds, limits, sweeps."""
import math

import numpy as np
import pytest

from conftest import params_with
from nlfront import eigen
from nlfront.grids import default_cells
from nlfront.model import Kernel, Nonlinearity, derived_constants


def test_eigenpair_basics(p1):
    spec = eigen.lambda1_spec(2.0, p1)
    pair = eigen.principal_eigenpair(spec)
    assert pair.residual < 1e-9
    assert np.all(pair.phi1 > 0.0) and np.all(pair.phi2 > 0.0)
    assert pair.iterations > 0
    assert abs(pair.lambda_p - 0.8192) < 5e-4


def test_power_iteration_matches_dense(p1):
    spec = eigen.lambda1_spec(2.0, p1, num_cells=200)
    op = eigen.assemble(spec)
    lam_dense = float(np.max(np.linalg.eigvals(op.dense()).real))
    pair = eigen.principal_eigenpair(spec)
    assert abs(pair.lambda_p - lam_dense) < 1e-10


def test_comparison_vectors_bound_the_eigenvalue(p1):
    # the constant positive test vectors built from the closed-form rates
    # must give one-sided residuals, which pins lambda between the rates
    dc = derived_constants(p1)
    for l in (0.5, 2.0, 10.0, 50.0):
        spec = eigen.lambda1_spec(l, p1)
        op = eigen.assemble(spec)
        n = spec.num_cells
        w_a = np.concatenate([np.full(n, dc.thetaA), np.ones(n)])
        resid_a = op.matvec(w_a) - dc.gammaA * w_a
        assert np.max(resid_a) <= 1e-12
        lam = eigen.principal_eigenpair(spec).lambda_p
        assert lam <= dc.gammaA + 1e-6
        assert lam >= dc.gammaB - 1e-6


def test_lambda_monotone_in_length(p1):
    vals = [eigen.lambda1(l, p1) for l in (0.5, 1.0, 2.0, 5.0, 10.0)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_sign_agreement_and_ratio_band(p1):
    for l in (0.1, 1.0, 10.0, 100.0):
        lam1 = eigen.lambda1(l, p1)
        lam2 = eigen.lambda2(l, p1)
        assert lam1 > 0 and lam2 > 0  # this family grows at every length
        assert lam1 / 2.0 - 1e-6 <= lam2 <= lam1 / 2.0 + 1e-6


def test_ratio_band_asymmetric_slopes():
    p = params_with(nonlinearity=Nonlinearity("saturating", 2.0, 3.0))
    for l in (1.0, 4.0):
        lam1 = eigen.lambda1(l, p)
        lam2 = eigen.lambda2(l, p)
        assert lam1 > 0
        assert lam1 / 3.0 - 1e-6 <= lam2 <= lam1 / 2.0 + 1e-6


def test_small_dispersal_limit(p1):
    lam = eigen.lambda1(10.0, params_with(d1=1e-3, d2=1e-3))
    assert abs(lam - 1.0) < 0.05


def test_scalar_principal_anchor_and_range(laplace):
    kappa = eigen.scalar_principal(1.0, 0.0, laplace, 1.0)
    assert abs(kappa - (-0.2901587827289902)) < 1e-10
    for l in (0.5, 2.0, 10.0):
        k = eigen.scalar_principal(1.0, 0.0, laplace, l)
        assert -0.5 < k < 0.0


def test_scalar_principal_affine_in_rate_and_shift(laplace):
    base = eigen.scalar_principal(1.0, 0.0, laplace, 3.0)
    for d, a_diag in ((0.3, -1.0), (2.0, 0.7)):
        val = eigen.scalar_principal(d, a_diag, laplace, 3.0)
        assert abs(val - (d * base + a_diag)) < 1e-9


def test_equal_rate_eigenvalue_splits_exactly(p1):
    # equal kernels and equal rates share the scalar eigenfunction, so the
    # pair eigenvalue is the scalar part plus the coupling growth rate
    cells = default_cells(10.0)
    kappa = eigen.scalar_principal(1.0, 0.0, p1.kernel1, 10.0, num_cells=cells)
    for d in (10.0, 100.0, 500.0):
        lam = eigen.lambda1(10.0, params_with(d1=d, d2=d), num_cells=cells)
        assert abs(lam - (d * kappa + 1.0)) < 1e-7
    assert eigen.lambda1(10.0, params_with(d1=500.0, d2=500.0)) < -5.0


def test_degenerate_row_still_solvable():
    pair = eigen.principal_eigenpair(eigen.lambda1_spec(2.0, params_with(d1=0.0)))
    assert pair.residual < 1e-9
    assert np.all(pair.phi1 > 0.0) and np.all(pair.phi2 > 0.0)


def test_grid_floor_and_spec_validation(p1, laplace):
    with pytest.raises(eigen.EigenGridError, match="below the minimum"):
        eigen.assemble(eigen.lambda1_spec(2.0, p1, num_cells=4))
    with pytest.raises(eigen.EigenGridError, match="length must be positive"):
        eigen.lambda1_spec(-1.0, p1)
    with pytest.raises(eigen.EigenGridError, match="a12, a21"):
        eigen.OperatorSpec(l=1.0, d1=1.0, d2=1.0, a11=-1.0, a22=-1.0,
                           a12=0.0, a21=2.0, kernel1=laplace, kernel2=laplace)


def test_critical_length_bisection(p1_d6):
    crit = eigen.critical_length(p1_d6)
    assert abs(crit.value - 2.187040) < 5e-6
    assert abs(crit.lam_at_value) < 5e-7
    lo, hi = crit.bracket
    assert lo <= crit.value <= hi
    assert eigen.lambda1(lo, p1_d6, num_cells=crit.num_cells) < 0
    assert eigen.lambda1(hi, p1_d6, num_cells=crit.num_cells) > 0


def test_critical_length_rejects_one_signed_families(p1, vanish_params):
    with pytest.raises(ValueError):
        eigen.critical_length(p1)  # positive at every length
    with pytest.raises(ValueError):
        eigen.critical_length(vanish_params)  # negative at every length


def test_sweep_over_length(p1):
    spec = eigen.lambda1_spec(1.0, p1)
    result = eigen.sweep(spec, "l", [0.5, 1.0, 2.0, 4.0])
    assert len(result.points) == 4
    assert result.violations == ()
    assert result.errors == ()
    lams = [pt.lambda_p for pt in result.points]
    assert all(b > a for a, b in zip(lams, lams[1:]))


def test_sweep_direction_and_errors(p1):
    spec = eigen.lambda1_spec(2.0, p1)
    result = eigen.sweep(spec, "d1", [0.5, 1.0, 2.0])
    assert result.violations == ()  # decreasing trend expected and observed
    bad = eigen.sweep(spec, "l", [1.0, -1.0, 2.0])
    assert len(bad.points) == 2
    assert len(bad.errors) == 1 and bad.errors[0][0] == -1.0
    with pytest.raises(ValueError, match="cannot sweep"):
        eigen.sweep(spec, "kernel1", [1.0])
