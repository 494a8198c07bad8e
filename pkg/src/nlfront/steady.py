"""Fixed-domain steady states and dynamics.

On a fixed habitat [0, l] the system has at most one positive steady state,
reached by squeezing a monotone fixed-point iteration from above (constant
equilibrium) and below (a small multiple of the principal eigenfunction).
The time-dependent problem on the same domain is integrated with Heun's
method and classified by its decay behaviour against the sign of the
principal eigenvalue.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import eigen
from .grids import KernelConvolver, cell_nodes, default_cells
from .model import ModelParams, NoPositiveEquilibrium, equilibrium

__all__ = [
    "SteadyState",
    "DecayEstimate",
    "EvolutionTrace",
    "ComparisonReport",
    "FixedDomain",
    "SandwichError",
    "BlowUpError",
    "gamma_step",
    "solve_steady",
    "evolve_fixed",
    "comparison_check",
    "stability_timestep",
]

GAP_TOL = 1e-9
MAX_SANDWICH_ITERS = 100_000
SIGN_BAND = 1e-6  # |lambda1| below this is treated as critical


class SandwichError(RuntimeError):
    """Two-sided iteration failed to meet; carries the last gap."""

    def __init__(self, message: str, gap: float, iterations: int):
        super().__init__(message)
        self.gap = gap
        self.iterations = iterations


class BlowUpError(RuntimeError):
    """Fields escaped the a-priori bound: a discretization bug, not dynamics."""


def stability_timestep(params: ModelParams) -> float:
    """Positivity-preserving explicit step for the reaction-dispersal system."""
    nl = params.nonlinearity
    return 0.4 / (params.d1 + params.d2 + params.a + params.b + nl.hp0 + nl.gp0)


class FixedDomain:
    """Discretization of the fixed-habitat system on [0, l]."""

    def __init__(self, l: float, params: ModelParams, num_cells: int | None = None):
        n = num_cells if num_cells is not None else default_cells(l)
        self.l = float(l)
        self.params = params
        self.n = n
        self.dx = self.l / n
        self.x = cell_nodes(0.0, self.dx, n)
        self.conv1 = KernelConvolver(params.kernel1, self.dx, n)
        self.conv2 = KernelConvolver(params.kernel2, self.dx, n)
        self.j1 = np.asarray(params.kernel1.cdf(self.x))
        self.j2 = np.asarray(params.kernel2.cdf(self.x))
        self._den1 = params.d1 * self.j1 + params.a
        self._den2 = params.d2 * self.j2 + params.b

    def rhs(self, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p, nl = self.params, self.params.nonlinearity
        f1 = p.d1 * (self.conv1.apply(u) - self.j1 * u) - p.a * u + nl.H(v)
        f2 = p.d2 * (self.conv2.apply(v) - self.j2 * v) - p.b * v + nl.G(u)
        return f1, f2

    def gamma(self, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """One step of the monotone fixed-point map."""
        p, nl = self.params, self.params.nonlinearity
        g1 = (p.d1 * self.conv1.apply(u) + nl.H(v)) / self._den1
        g2 = (p.d2 * self.conv2.apply(v) + nl.G(u)) / self._den2
        return g1, g2

    def residual(self, u: np.ndarray, v: np.ndarray) -> float:
        f1, f2 = self.rhs(u, v)
        return max(float(np.max(np.abs(f1))), float(np.max(np.abs(f2))))

    def fields_from(self, f, name: str) -> np.ndarray:
        vals = np.asarray(f(self.x) if callable(f) else f, dtype=float)
        if vals.shape != self.x.shape:
            raise ValueError(f"{name} does not match the grid ({vals.shape} vs {self.x.shape})")
        return vals


def gamma_step(u, v, l: float, params: ModelParams,
               num_cells: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Single monotone fixed-point step on a throwaway discretization."""
    dom = FixedDomain(l, params, num_cells)
    return dom.gamma(np.asarray(u, dtype=float), np.asarray(v, dtype=float))


@dataclass(frozen=True)
class SteadyState:
    l: float
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    residual: float
    iterations: int
    lambda1: float

    @property
    def is_zero(self) -> bool:
        return float(np.max(self.u)) == 0.0 and float(np.max(self.v)) == 0.0


def solve_steady(l: float, params: ModelParams, num_cells: int | None = None,
                 tol: float = GAP_TOL) -> SteadyState:
    """Unique nonnegative steady state on [0, l].

    When the principal eigenvalue is positive the state is squeezed between
    the constant equilibrium from above and a small multiple of the principal
    eigenfunction from below; both sequences are monotone, and convergence
    means they agree within `tol`.  A nonpositive eigenvalue certifies the
    zero state, which is returned directly.
    """
    pair = eigen.principal_eigenpair(eigen.lambda1_spec(l, params, num_cells))
    dom = FixedDomain(l, params, num_cells)
    lam = pair.lambda_p
    if lam <= 0:
        z = np.zeros(dom.n)
        return SteadyState(l=l, x=dom.x, u=z, v=z.copy(), residual=0.0,
                           iterations=0, lambda1=lam)

    try:
        cap_u, cap_v = equilibrium(params)
    except NoPositiveEquilibrium as exc:  # lambda1 > 0 forces R0 > 1
        raise SandwichError(f"inconsistent state: {exc}", math.inf, 0) from exc
    up = (np.full(dom.n, cap_u), np.full(dom.n, cap_v))

    phi = np.concatenate([pair.phi1, pair.phi2])
    eps = 1e-3 * float(phi.min())  # sup norm of the pair is already 1
    lo = (eps * pair.phi1, eps * pair.phi2)
    for _ in range(200):
        g1, g2 = dom.gamma(*lo)
        if np.all(g1 >= lo[0] - 1e-15) and np.all(g2 >= lo[1] - 1e-15):
            break
        eps *= 0.5
        lo = (eps * pair.phi1, eps * pair.phi2)
    else:
        raise SandwichError("could not seed a lower solution from the eigenfunction",
                            math.inf, 0)

    gap = math.inf
    iters = 0
    while iters < MAX_SANDWICH_ITERS:
        up = dom.gamma(*up)
        lo = dom.gamma(*lo)
        iters += 2
        gap = max(float(np.max(np.abs(up[0] - lo[0]))),
                  float(np.max(np.abs(up[1] - lo[1]))))
        if gap < tol:
            break
    else:
        raise SandwichError(
            f"sequences fail to sandwich within {MAX_SANDWICH_ITERS} iterations "
            f"(gap {gap:.3e})", gap, iters,
        )

    u, v = up
    res = dom.residual(u, v)
    extra = 0
    while res >= tol and extra < 500:
        u, v = dom.gamma(u, v)
        res = dom.residual(u, v)
        iters += 1
        extra += 1
    return SteadyState(l=l, x=dom.x, u=u, v=v, residual=res, iterations=iters, lambda1=lam)


# ---------------------------------------------------------------------------
# fixed-domain dynamics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvolutionTrace:
    t: np.ndarray
    norm_u: np.ndarray
    norm_v: np.ndarray
    norm_sum: np.ndarray
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    dt: float
    num_cells: int


@dataclass(frozen=True)
class DecayEstimate:
    """Late-time behaviour of a fixed-domain run.

    mode ``exponential``: fitted rate k of exp(-k t); ``algebraic``: fitted
    power k of (1+t)^-k; ``none``: the run converges to the positive steady
    state instead of decaying.
    """

    mode: str
    k: float
    window: tuple[float, float]
    r_squared: float
    lambda1: float


def _linear_fit(ts: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(ts, ys, 1)
    pred = slope * ts + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def evolve_fixed(l: float, params: ModelParams, u0, v0, horizon: float,
                 num_cells: int | None = None, dt: float | None = None,
                 sample_interval: float | None = None,
                 ) -> tuple[EvolutionTrace, DecayEstimate]:
    """Integrate the fixed-habitat system and classify its late-time decay.

    Heun steps under the positivity CFL; sampled sup norms; the decay fit
    runs over the second half of the horizon.  Fields exceeding ten times
    the natural a-priori bound abort with BlowUpError.
    """
    dom = FixedDomain(l, params, num_cells)
    u = dom.fields_from(u0, "u0")
    v = dom.fields_from(v0, "v0")
    if np.any(u < 0) or np.any(v < 0):
        raise ValueError("initial fields must be nonnegative")

    step = dt if dt is not None else stability_timestep(params)
    n_steps = max(1, int(math.ceil(horizon / step - 1e-12)))
    step = horizon / n_steps
    if sample_interval is None:
        sample_interval = max(step, horizon / 400.0)
    stride = max(1, round(sample_interval / step))

    bound_terms = [float(np.max(u)), float(np.max(v)), 1e-12]
    try:
        cu, cv = equilibrium(params)
        bound_terms += [cu, cv]
    except NoPositiveEquilibrium:
        pass
    ceiling = 10.0 * max(bound_terms)

    ts = [0.0]
    nu = [float(np.max(u))]
    nv = [float(np.max(v))]
    for k in range(1, n_steps + 1):
        f1, f2 = dom.rhs(u, v)
        up, vp = u + step * f1, v + step * f2
        g1, g2 = dom.rhs(up, vp)
        u = u + 0.5 * step * (f1 + g1)
        v = v + 0.5 * step * (f2 + g2)
        if k % stride == 0 or k == n_steps:
            su, sv = float(np.max(u)), float(np.max(v))
            if max(su, sv) > ceiling:
                raise BlowUpError(
                    f"fields exceeded 10x the a-priori bound at t={k * step:.3f}"
                )
            ts.append(k * step)
            nu.append(su)
            nv.append(sv)
    t_arr = np.array(ts)
    nu_arr, nv_arr = np.array(nu), np.array(nv)
    trace = EvolutionTrace(t=t_arr, norm_u=nu_arr, norm_v=nv_arr,
                           norm_sum=nu_arr + nv_arr, x=dom.x, u=u, v=v,
                           dt=step, num_cells=dom.n)

    lam = eigen.lambda1(l, params, num_cells=dom.n)
    half = t_arr >= horizon / 2.0
    window = (float(t_arr[half][0]), float(t_arr[-1]))
    vals = trace.norm_sum[half]
    if lam > SIGN_BAND:
        est = DecayEstimate(mode="none", k=math.nan, window=window,
                            r_squared=math.nan, lambda1=lam)
    elif lam < -SIGN_BAND:
        slope, r2 = _linear_fit(t_arr[half], np.log(vals))
        est = DecayEstimate(mode="exponential", k=-slope, window=window,
                            r_squared=r2, lambda1=lam)
    else:
        slope, r2 = _linear_fit(np.log1p(t_arr[half]), np.log(vals))
        est = DecayEstimate(mode="algebraic", k=-slope, window=window,
                            r_squared=r2, lambda1=lam)
    return trace, est


# ---------------------------------------------------------------------------
# comparison pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    ordered: bool
    min_gap_u: float
    min_gap_v: float
    upper_max_residual: float
    lower_min_residual: float


def comparison_check(l: float, params: ModelParams, upper_pair, lower_pair,
                     num_cells: int | None = None, slack: float = 1e-9) -> ComparisonReport:
    """Validate an (upper, lower) solution pair and report their ordering.

    The upper pair must satisfy both steady inequalities with residual <= slack,
    the lower pair with residual >= -slack; anything else raises ValueError.
    """
    dom = FixedDomain(l, params, num_cells)
    uu, uv = (dom.fields_from(f, n) for f, n in zip(upper_pair, ("upper u", "upper v")))
    lu, lv = (dom.fields_from(f, n) for f, n in zip(lower_pair, ("lower u", "lower v")))
    f1u, f2u = dom.rhs(uu, uv)
    f1l, f2l = dom.rhs(lu, lv)
    up_max = max(float(np.max(f1u)), float(np.max(f2u)))
    lo_min = min(float(np.min(f1l)), float(np.min(f2l)))
    if up_max > slack or lo_min < -slack:
        raise ValueError(
            "not a super/sub pair: upper residual max "
            f"{up_max:.3e}, lower residual min {lo_min:.3e}"
        )
    gap_u = float(np.min(uu - lu))
    gap_v = float(np.min(uv - lv))
    return ComparisonReport(
        ordered=(gap_u >= -1e-12 and gap_v >= -1e-12),
        min_gap_u=gap_u, min_gap_v=gap_v,
        upper_max_residual=up_max, lower_min_residual=lo_min,
    )
