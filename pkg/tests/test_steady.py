"""Fixed-habitat steady states, monotone iteration, and decay classification."""
import numpy as np
import pytest

from conftest import params_with
from nlfront import eigen, steady
from nlfront.model import equilibrium, initial_profile


@pytest.fixture(scope="module")
def steady_l10(p1):
    return steady.solve_steady(10.0, p1)


def test_positive_steady_state(p1, steady_l10):
    s = steady_l10
    assert not s.is_zero
    assert s.residual < 1e-9
    assert np.all(s.u > 0.0) and np.all(s.v > 0.0)
    assert s.lambda1 > 0.0
    U, V = equilibrium(p1)
    assert np.max(s.u) < U and np.max(s.v) < V


def test_zero_state_below_critical_length(p1_d6):
    s = steady.solve_steady(1.0, p1_d6)
    assert s.is_zero
    assert np.all(s.u == 0.0) and np.all(s.v == 0.0)
    assert s.lambda1 < 0.0


def test_states_grow_with_the_habitat(p1, steady_l10):
    s20 = steady.solve_steady(20.0, p1)
    u20 = np.interp(steady_l10.x, s20.x, s20.u)
    v20 = np.interp(steady_l10.x, s20.x, s20.v)
    assert np.all(u20 > steady_l10.u)
    assert np.all(v20 > steady_l10.v)


def test_two_sided_iteration_brackets_monotonically(p1):
    l, n = 6.0, 240
    U, V = equilibrium(p1)
    hi = (np.full(n, U), np.full(n, V))
    lo = (np.full(n, 1e-4), np.full(n, 1e-4))
    for _ in range(60):
        hi_next = steady.gamma_step(*hi, l, p1, num_cells=n)
        lo_next = steady.gamma_step(*lo, l, p1, num_cells=n)
        for new, old in zip(hi_next, hi):
            assert np.all(new <= old + 1e-12)
        for new, old in zip(lo_next, lo):
            assert np.all(new >= old - 1e-12)
        for top, bottom in zip(hi_next, lo_next):
            assert np.all(top >= bottom - 1e-12)
        hi, lo = hi_next, lo_next


def test_independent_quadrature_residual(p1, steady_l10):
    # rebuild the balance with trapezoid weights and pointwise kernel values;
    # a quadrature-specific artifact would not survive the change of rule.
    # the source grid holds cell midpoints, so the trapezoid nodes extend to
    # the habitat endpoints (linear extrapolation) to cover the same span.
    s = steady_l10
    l = float(s.x[-1] + (s.x[1] - s.x[0]) / 2.0)
    nodes = np.concatenate([[0.0], s.x, [l]])
    nl = p1.nonlinearity

    def extend(f):
        left = (3.0 * f[0] - f[1]) / 2.0
        right = (3.0 * f[-1] - f[-2]) / 2.0
        return np.concatenate([[left], f, [right]])

    for d, kern, field, gain, decay, other in (
        (p1.d1, p1.kernel1, s.u, nl.H, p1.a, s.v),
        (p1.d2, p1.kernel2, s.v, nl.G, p1.b, s.u),
    ):
        mat = np.asarray(kern.pdf(s.x[:, None] - nodes[None, :]))
        conv = np.trapezoid(mat * extend(field)[None, :], nodes, axis=1)
        r = d * (conv - np.asarray(kern.cdf(s.x)) * field) + gain(other) - decay * field
        assert np.max(np.abs(r)) < 5e-3


def test_uniqueness_from_scattered_starts(p1):
    l, n = 6.0, 240
    rng = np.random.default_rng(11)
    finals = []
    for _ in range(3):
        u = rng.uniform(0.05, 2.0, n)
        v = rng.uniform(0.05, 2.0, n)
        for _ in range(100_000):
            un, vn = steady.gamma_step(u, v, l, p1, num_cells=n)
            delta = max(float(np.max(np.abs(un - u))), float(np.max(np.abs(vn - v))))
            u, v = un, vn
            if delta < 1e-12:
                break
        finals.append((u, v))
    for fu, fv in finals[1:]:
        assert np.max(np.abs(fu - finals[0][0])) < 1e-8
        assert np.max(np.abs(fv - finals[0][1])) < 1e-8


def test_evolution_preserves_order(p1):
    l = 4.0
    lo_tr, _ = steady.evolve_fixed(
        l, p1, initial_profile("tent", 0.3, l), initial_profile("tent", 0.2, l),
        horizon=20.0, sample_interval=0.5)
    hi_tr, _ = steady.evolve_fixed(
        l, p1, initial_profile("tent", 0.9, l), initial_profile("tent", 0.6, l),
        horizon=20.0, sample_interval=0.5)
    assert np.all(hi_tr.norm_u >= lo_tr.norm_u - 1e-12)
    assert np.all(hi_tr.norm_v >= lo_tr.norm_v - 1e-12)
    assert np.all(hi_tr.u >= lo_tr.u - 1e-12)
    assert np.all(hi_tr.v >= lo_tr.v - 1e-12)


def test_decay_exponential_below_threshold(p1_d6):
    l = 1.7742
    trace, fit = steady.evolve_fixed(
        l, p1_d6, initial_profile("tent", 1.0, l), initial_profile("tent", 0.5, l),
        horizon=80.0)
    assert fit.mode == "exponential"
    assert fit.lambda1 < -1e-6
    assert fit.k > 0.0
    assert fit.r_squared > 0.99
    assert trace.norm_sum[-1] < trace.norm_sum[0]


def test_no_decay_above_threshold(p1_d6):
    l = 4.0
    trace, fit = steady.evolve_fixed(
        l, p1_d6, initial_profile("tent", 1.0, l), initial_profile("tent", 0.5, l),
        horizon=60.0)
    assert fit.mode == "none"
    assert fit.lambda1 > 1e-6
    assert trace.norm_sum[-1] > 0.1


def test_comparison_check_accepts_equilibrium_roof(p1):
    l = 10.0
    U, V = equilibrium(p1)
    report = steady.comparison_check(
        l, p1,
        upper_pair=(lambda x: np.full_like(x, U), lambda x: np.full_like(x, V)),
        lower_pair=(lambda x: np.zeros_like(x), lambda x: np.zeros_like(x)),
    )
    assert report.ordered
    assert report.upper_max_residual <= 1e-9
    assert report.lower_min_residual >= -1e-9


def test_comparison_check_rejects_growing_roof(p1):
    with pytest.raises(ValueError, match="not a super/sub pair"):
        steady.comparison_check(
            10.0, p1,
            upper_pair=(initial_profile("tent", 1e-3, 10.0),
                        initial_profile("tent", 1e-3, 10.0)),
            lower_pair=(lambda x: np.zeros_like(x), lambda x: np.zeros_like(x)),
        )


def test_timestep_policy(p1):
    dt = steady.stability_timestep(p1)
    assert abs(dt - 0.4 / 8.0) < 1e-15
