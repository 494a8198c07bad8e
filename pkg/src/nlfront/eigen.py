"""Principal eigenvalues of the coupled nonlocal dispersal operator.

The operator acts on pairs (phi1, phi2) on [0, l]:

    L[phi] = ( d1 (K1 phi1 - j1 phi1) + a11 phi1 + a12 phi2,
               a21 phi1 + d2 (K2 phi2 - j2 phi2) + a22 phi2 )

where K is convolution against the kernel restricted to [0, l] and j(x) is
the kernel CDF (the mass a point at depth x keeps on its inner side, the
habitat being unbounded to the right of the front only through j).  With
a12, a21 > 0 the shifted operator is entrywise nonnegative and irreducible,
so the principal eigenvalue is found by power iteration on the shifted
matrix; large or badly conditioned problems fall back to an Arnoldi solve
on the same operator and are then polished back through the power-iteration
convergence test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigs

from .grids import KernelConvolver, cell_nodes, default_cells
from .model import Kernel, ModelParams, derived_constants

__all__ = [
    "EigenGridError",
    "EigenConvergenceError",
    "OperatorSpec",
    "Eigenpair",
    "DiscreteOperator",
    "assemble",
    "principal_eigenpair",
    "scalar_principal",
    "lambda1",
    "lambda2",
    "lambda1_spec",
    "lambda2_spec",
    "critical_length",
    "CriticalLength",
    "sweep",
    "SweepPoint",
    "SweepResult",
]

RAYLEIGH_TOL = 1e-12
RESIDUAL_TOL = 1e-10
TOTAL_ITER_CAP = 10**6


class EigenGridError(ValueError):
    """Refused operator assembly (resolution too coarse or bad coefficients)."""


class EigenConvergenceError(RuntimeError):
    """Eigensolve ran out of budget; carries the last iterate."""

    def __init__(self, message: str, lambda_p: float, vector: np.ndarray, iterations: int,
                 residual: float):
        super().__init__(message)
        self.lambda_p = lambda_p
        self.vector = vector
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class OperatorSpec:
    """Assembly recipe: domain length, rates, coupling matrix entries, kernels.

    ``num_cells`` defaults to the package resolution policy
    ``max(200, ceil(40 l))`` when omitted.
    """

    l: float
    d1: float
    d2: float
    a11: float
    a22: float
    a12: float
    a21: float
    kernel1: Kernel
    kernel2: Kernel
    num_cells: int | None = None

    def __post_init__(self):
        if not (self.l > 0):
            raise EigenGridError("domain length must be positive")
        if self.d1 < 0 or self.d2 < 0 or self.d1 + self.d2 <= 0:
            raise EigenGridError("need d1, d2 >= 0 and d1 + d2 > 0")
        if self.a12 <= 0 or self.a21 <= 0:
            raise EigenGridError("coupling entries a12, a21 must be positive (irreducibility)")
        if self.num_cells is None:
            object.__setattr__(self, "num_cells", default_cells(self.l))


@dataclass(frozen=True)
class Eigenpair:
    lambda_p: float
    phi1: np.ndarray
    phi2: np.ndarray
    x: np.ndarray
    iterations: int
    residual: float


class DiscreteOperator:
    """Assembled grid operator with fast matvec on stacked (phi1, phi2)."""

    def __init__(self, spec: OperatorSpec):
        n = spec.num_cells
        self.spec = spec
        self.dx = spec.l / n
        self.n = n
        self.x = cell_nodes(0.0, self.dx, n)
        self.conv1 = KernelConvolver(spec.kernel1, self.dx, n) if spec.d1 > 0 else None
        self.conv2 = KernelConvolver(spec.kernel2, self.dx, n) if spec.d2 > 0 else None
        self.j1 = np.asarray(spec.kernel1.cdf(self.x))
        self.j2 = np.asarray(spec.kernel2.cdf(self.x))
        self.diag1 = -spec.d1 * self.j1 + spec.a11
        self.diag2 = -spec.d2 * self.j2 + spec.a22
        # entrywise-nonnegativity shift for the power iteration
        self.shift = (
            spec.d1 * float(self.j1.max()) + spec.d2 * float(self.j2.max())
            + abs(spec.a11) + abs(spec.a22) + spec.a12 + spec.a21 + 1.0
        )

    @property
    def dim(self) -> int:
        return 2 * self.n

    def matvec(self, w: np.ndarray) -> np.ndarray:
        s = self.spec
        u, v = w[: self.n], w[self.n:]
        r1 = self.diag1 * u + s.a12 * v
        if self.conv1 is not None:
            r1 = r1 + s.d1 * self.conv1.apply(u)
        r2 = self.diag2 * v + s.a21 * u
        if self.conv2 is not None:
            r2 = r2 + s.d2 * self.conv2.apply(v)
        return np.concatenate([r1, r2])

    def dense(self) -> np.ndarray:
        s = self.spec
        n = self.n
        m = np.zeros((2 * n, 2 * n))
        if self.conv1 is not None:
            m[:n, :n] = s.d1 * self.conv1.dense()
        if self.conv2 is not None:
            m[n:, n:] = s.d2 * self.conv2.dense()
        m[:n, :n] += np.diag(self.diag1)
        m[n:, n:] += np.diag(self.diag2)
        m[:n, n:] = s.a12 * np.eye(n)
        m[n:, :n] = s.a21 * np.eye(n)
        return m


def assemble(spec: OperatorSpec) -> DiscreteOperator:
    """Build the discrete operator; refuses grids with fewer than 8 cells."""
    if spec.num_cells < 8:
        raise EigenGridError(
            f"refusing to assemble: num_cells={spec.num_cells} is below the minimum of 8"
        )
    return DiscreteOperator(spec)


# ---------------------------------------------------------------------------
# iteration engine
# ---------------------------------------------------------------------------

def _power_loop(matvec, shift, x, budget, iters_so_far):
    """Power iteration on (A + shift I); returns (lam, x, iters, resid, ok)."""
    prev = math.inf
    rq = math.nan
    resid = math.inf
    it = iters_so_far
    for _ in range(budget):
        y = matvec(x) + shift * x
        rq = float(x @ y) / float(x @ x)
        resid = float(np.max(np.abs(y - rq * x)))
        it += 1
        if abs(rq - prev) < RAYLEIGH_TOL and resid < RESIDUAL_TOL:
            return rq - shift, x, it, resid, True
        prev = rq
        top = float(np.max(np.abs(y)))
        if top == 0.0 or not math.isfinite(top):
            raise EigenConvergenceError("power iterate degenerated", rq - shift, x, it, resid)
        x = y / top
    return rq - shift, x, it, resid, False


def _arnoldi(matvec, dim, shift, x0):
    op = LinearOperator((dim, dim), matvec=lambda w: matvec(w) + shift * w)
    ncv = min(dim, 80)
    try:
        vals, vecs = eigs(op, k=1, which="LM", v0=x0, ncv=ncv,
                          maxiter=max(5000, 40 * ncv), tol=1e-12)
        vec = vecs[:, 0]
    except ArpackNoConvergence as exc:
        if len(exc.eigenvalues):
            vec = exc.eigenvectors[:, 0]
        else:
            return None
    except ArpackError:
        return None
    vec = np.real(vec)
    peak = vec[np.argmax(np.abs(vec))]
    if peak < 0:
        vec = -vec
    top = float(np.max(np.abs(vec)))
    return vec / top if top > 0 else None


def _dominant_pair(matvec, dim, shift, label: str):
    """Shared driver: power iteration, Arnoldi rescue, power-certified finish."""
    x = np.ones(dim)
    # small well-shifted problems converge fast under plain power iteration;
    # big or heavily shifted ones go straight to Arnoldi after a warm-up
    direct = dim <= 2400 and shift <= 40.0
    budget = 8000 if direct else 300
    lam, x, iters, resid, ok = _power_loop(matvec, shift, x, budget, 0)
    if not ok:
        seed = _arnoldi(matvec, dim, shift, x)
        if seed is not None:
            x = seed
        lam, x, iters, resid, ok = _power_loop(
            matvec, shift, x, min(120000, TOTAL_ITER_CAP - iters), iters
        )
    if not ok:
        raise EigenConvergenceError(
            f"{label}: eigensolve exhausted its iteration budget "
            f"(residual {resid:.3e})", lam, x, iters, resid,
        )
    top = float(np.max(np.abs(x)))
    x = x / top
    if float(x.min()) <= 0.0:
        floor = float(x.min())
        if floor < -1e-10:
            raise EigenConvergenceError(
                f"{label}: converged vector is not positive (min {floor:.3e})",
                lam, x, iters, resid,
            )
        x = np.maximum(x, 1e-300)
    return lam, x, iters, resid


def principal_eigenpair(spec: OperatorSpec) -> Eigenpair:
    """Principal eigenvalue and positive eigenfunction pair, sup-norm 1.

    Convergence contract: successive Rayleigh quotients agree to 1e-12 and
    the sup-norm eigen-residual is below 1e-10.
    """
    op = assemble(spec)
    lam, x, iters, resid = _dominant_pair(op.matvec, op.dim, op.shift, "principal_eigenpair")
    return Eigenpair(
        lambda_p=lam, phi1=x[: op.n], phi2=x[op.n:], x=op.x,
        iterations=iters, residual=resid,
    )


def scalar_principal(d: float, a_diag: float, kernel: Kernel, l: float,
                     num_cells: int | None = None) -> float:
    """Principal eigenvalue of the scalar operator d (K - j) + a_diag on [0, l]."""
    if d <= 0:
        raise EigenGridError("scalar problem needs d > 0")
    n = num_cells if num_cells is not None else default_cells(l)
    if n < 8:
        raise EigenGridError(f"refusing to assemble: num_cells={n} is below the minimum of 8")
    dx = l / n
    x = cell_nodes(0.0, dx, n)
    conv = KernelConvolver(kernel, dx, n)
    j = np.asarray(kernel.cdf(x))
    diag = -d * j + a_diag
    shift = d * float(j.max()) + abs(a_diag) + 1.0

    def matvec(u):
        return d * conv.apply(u) + diag * u

    lam, _, _, _ = _dominant_pair(matvec, n, shift, "scalar_principal")
    return lam


# ---------------------------------------------------------------------------
# model-facing wrappers
# ---------------------------------------------------------------------------

def lambda1_spec(l: float, params: ModelParams, num_cells: int | None = None) -> OperatorSpec:
    nl = params.nonlinearity
    return OperatorSpec(
        l=l, d1=params.d1, d2=params.d2,
        a11=-params.a, a22=-params.b, a12=nl.hp0, a21=nl.gp0,
        kernel1=params.kernel1, kernel2=params.kernel2, num_cells=num_cells,
    )


def lambda2_spec(l: float, params: ModelParams, num_cells: int | None = None) -> OperatorSpec:
    """Slope-normalized companion operator; self-adjoint since both couplings are 1."""
    nl = params.nonlinearity
    hp, gp = nl.hp0, nl.gp0
    return OperatorSpec(
        l=l, d1=params.d1 / hp, d2=params.d2 / gp,
        a11=-params.a / hp, a22=-params.b / gp, a12=1.0, a21=1.0,
        kernel1=params.kernel1, kernel2=params.kernel2, num_cells=num_cells,
    )


def lambda1(l: float, params: ModelParams, num_cells: int | None = None) -> float:
    """Principal eigenvalue of the linearization at zero on [0, l]."""
    return principal_eigenpair(lambda1_spec(l, params, num_cells)).lambda_p


def lambda2(l: float, params: ModelParams, num_cells: int | None = None) -> float:
    """Principal eigenvalue of the slope-normalized operator on [0, l].

    Shares its sign with lambda1 at every l, which makes it the cheaper
    dial for dispersal-rate thresholds.
    """
    return principal_eigenpair(lambda2_spec(l, params, num_cells)).lambda_p


@dataclass(frozen=True)
class CriticalLength:
    value: float
    lam_at_value: float
    bracket: tuple[float, float]
    num_cells: int
    evaluations: int


def critical_length(params: ModelParams, lo: float = 0.01, hi_start: float = 1.0,
                    lam_tol: float = 5e-7, num_cells: int | None = None,
                    target: float = 0.0) -> CriticalLength:
    """Root of l -> lambda1(l) - target by bisection at a pinned resolution.

    The resolution policy jumps with l, and near the root those jumps exceed
    the certificate tolerance, so once the bracket is fixed every evaluation
    uses one resolution (the policy at the upper bracket end).  Raises
    ValueError with a regime message when no sign change exists.
    """
    evals = 0

    def lam(l: float, cells: int | None) -> float:
        nonlocal evals
        evals += 1
        return lambda1(l, params, num_cells=cells) - target

    if lam(lo, num_cells) >= 0:
        raise ValueError("no threshold length: spreading persists for every front position")
    # lambda1 increases toward the large-domain rate, so a root above lo
    # exists exactly when that limit clears the target
    if derived_constants(params).gammaA <= target:
        raise ValueError("no threshold length: vanishing persists at every tested length")
    hi = max(hi_start, 2 * lo)
    while lam(hi, num_cells) <= 0:
        hi *= 2.0
        if hi > 5000.0:
            raise ValueError("no threshold length: vanishing persists at every tested length")
    cells = num_cells if num_cells is not None else default_cells(hi)
    f_lo, f_hi = lam(lo, cells), lam(hi, cells)
    if f_lo >= 0 or f_hi <= 0:
        raise ValueError("bracket lost after pinning the resolution")
    mid, f_mid = 0.5 * (lo + hi), math.nan
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = lam(mid, cells)
        if f_mid > 0:
            hi = mid
        else:
            lo = mid
        if abs(f_mid) < lam_tol and (hi - lo) <= 0.5e-4 * max(1.0, mid):
            break
    return CriticalLength(value=mid, lam_at_value=f_mid + target, bracket=(lo, hi),
                          num_cells=cells, evaluations=evals)


# ---------------------------------------------------------------------------
# parameter sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    variable: str
    value: float
    lambda_p: float
    iterations: int
    residual: float


@dataclass(frozen=True)
class SweepResult:
    variable: str
    points: tuple[SweepPoint, ...]
    violations: tuple[str, ...]
    errors: tuple[tuple[float, str], ...]


_SWEEP_DIRECTION = {"l": 1, "a11": 1, "a22": 1, "a12": 1, "a21": 1, "d1": -1, "d2": -1}


def sweep(spec: OperatorSpec, variable: str, values) -> SweepResult:
    """Eigenvalue sweep over one spec field, with monotonicity screening.

    Domain-length sweeps re-derive the resolution policy per point; solver
    failures at single points are recorded and skipped rather than fatal.
    """
    if variable not in _SWEEP_DIRECTION:
        raise ValueError(f"cannot sweep over {variable!r}")
    points: list[SweepPoint] = []
    errors: list[tuple[float, str]] = []
    for v in values:
        v = float(v)
        kw = {variable: v}
        if variable == "l":
            kw["num_cells"] = default_cells(v)
        try:
            pair = principal_eigenpair(replace(spec, **kw))
        except (EigenConvergenceError, EigenGridError) as exc:
            errors.append((v, str(exc)))
            continue
        points.append(SweepPoint(variable, v, pair.lambda_p, pair.iterations, pair.residual))
    direction = _SWEEP_DIRECTION[variable]
    violations = []
    for prev, cur in zip(points, points[1:]):
        increasing = (cur.value > prev.value)
        step = (cur.lambda_p - prev.lambda_p) * (1 if increasing else -1) * direction
        if step < -1e-9:
            violations.append(
                f"{variable}: lambda_p moved {step:+.3e} against the expected trend "
                f"between {prev.value:g} and {cur.value:g}"
            )
    return SweepResult(variable=variable, points=tuple(points),
                       violations=tuple(violations), errors=tuple(errors))
