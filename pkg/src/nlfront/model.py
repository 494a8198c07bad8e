"""Dispersal kernels, interaction nonlinearities, parameter sets, derived constants.

Everything downstream (eigenvalue solvers, steady states, the moving-front
simulator, semi-wave profiles) consumes the objects defined here.  Kernels are
even probability densities given by closed-form families or tabulated values;
all of them expose exact CDFs and partial first moments so that grid operators
can be assembled from exact per-cell masses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import integrate, special

__all__ = [
    "ModelError",
    "MomentUndetermined",
    "NoPositiveEquilibrium",
    "Kernel",
    "Nonlinearity",
    "ModelParams",
    "DerivedConstants",
    "initial_profile",
    "boundary_weight",
    "first_moment",
    "equilibrium",
    "derived_constants",
]

KERNEL_FAMILIES = ("laplace", "gaussian", "cauchy", "table")

# window doubling limit for moment probing (windows 2**k, k <= MOMENT_MAX_K)
MOMENT_MAX_K = 20
MOMENT_RTOL = 1e-10
MOMENT_HUGE = 1e12


class ModelError(ValueError):
    """Invalid model input (parameter domain or hypothesis violation)."""


class MomentUndetermined(ModelError):
    """Moment probing could not classify the kernel tail as finite or infinite."""


class NoPositiveEquilibrium(ModelError):
    """The reaction system has no positive constant state at this perturbation."""


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """Even, nonnegative dispersal density.

    Parameters
    ----------
    family:
        One of ``laplace``, ``gaussian``, ``cauchy``, ``table``.
    scale:
        Length scale; densities are ``base(|x|/scale)/scale`` up to
        normalization.
    exponent:
        Tail exponent of the ``cauchy`` family, ``J ~ |x|**-exponent``;
        the default 2.0 is the standard Cauchy density 1/(pi(1+x^2)).
        Must exceed 1 for integrability.  Ignored by other families.
    points:
        ``table`` family only: ((x0, J0), (x1, J1), ...) with x0 = 0,
        strictly increasing abscissae, values >= 0, linearly interpolated
        and reflected evenly; zero beyond the last knot.  Normalized to
        unit mass at construction.
    n:
        Optional truncation index: the density is multiplied by the
        plateau-ramp cutoff (1 on |x|<=n, linear to 0 across n<|x|<=2n)
        and deliberately NOT renormalized, so the mass drops below 1.
    """

    family: str
    scale: float = 1.0
    exponent: float = 2.0
    points: tuple[tuple[float, float], ...] | None = None
    n: float | None = None

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ModelError(f"unknown kernel family {self.family!r}")
        if not (self.scale > 0) or not math.isfinite(self.scale):
            raise ModelError("kernel scale must be positive and finite")
        if self.family == "cauchy" and self.exponent <= 1.0:
            raise ModelError("cauchy tail exponent must exceed 1 for integrability")
        if self.n is not None and not (self.n > 0):
            raise ModelError("truncation index must be positive")
        if self.family == "table":
            self._init_table()
        elif self.points is not None:
            raise ModelError("points are only meaningful for the table family")

    def _init_table(self):
        if not self.points or len(self.points) < 2:
            raise ModelError("table kernel needs at least two (x, J) pairs")
        xs = np.array([p[0] for p in self.points], dtype=float)
        ys = np.array([p[1] for p in self.points], dtype=float)
        if xs[0] != 0.0 or np.any(np.diff(xs) <= 0):
            raise ModelError("table abscissae must start at 0 and increase strictly")
        if np.any(ys < 0) or ys[0] <= 0:
            raise ModelError("table values must be >= 0 with J(0) > 0")
        seg = np.diff(xs) * (ys[:-1] + ys[1:]) / 2.0
        raw_half = float(seg.sum())
        if raw_half <= 0:
            raise ModelError("table kernel has zero mass")
        ys = ys / (2.0 * raw_half)
        # cumulative ∫J and ∫tJ at the knots, exact for the linear interpolant
        cum = np.concatenate([[0.0], np.cumsum(np.diff(xs) * (ys[:-1] + ys[1:]) / 2.0)])
        slopes = np.diff(ys) / np.diff(xs)
        tj = []
        for i in range(len(xs) - 1):
            x0, x1 = xs[i], xs[i + 1]
            y0, m = ys[i], slopes[i]
            tj.append((y0 - m * x0) * (x1**2 - x0**2) / 2.0 + m * (x1**3 - x0**3) / 3.0)
        cum_t = np.concatenate([[0.0], np.cumsum(tj)])
        object.__setattr__(self, "_tx", xs)
        object.__setattr__(self, "_ty", ys)
        object.__setattr__(self, "_tcum", cum)
        object.__setattr__(self, "_tcum_t", cum_t)
        object.__setattr__(self, "_tslope", slopes)

    # -- base family pieces (no truncation) ---------------------------------

    def _base_pdf(self, r: np.ndarray) -> np.ndarray:
        s = self.scale
        if self.family == "laplace":
            return np.exp(-r / s) / (2.0 * s)
        if self.family == "gaussian":
            return np.exp(-((r / s) ** 2)) / (s * math.sqrt(math.pi))
        if self.family == "cauchy":
            g = self.exponent
            c = 1.0 / (2.0 * s * (math.pi / g) / math.sin(math.pi / g))
            return c / (1.0 + (r / s) ** g)
        # table
        return np.interp(r, self._tx, self._ty, right=0.0)

    def _base_half(self, u: np.ndarray) -> np.ndarray:
        """∫_0^u J, vectorized, exact, for u >= 0."""
        s = self.scale
        if self.family == "laplace":
            return (1.0 - np.exp(-u / s)) / 2.0
        if self.family == "gaussian":
            return special.erf(u / s) / 2.0
        if self.family == "cauchy":
            g = self.exponent
            c = 1.0 / (2.0 * s * (math.pi / g) / math.sin(math.pi / g))
            t = u / s
            return c * s * t * special.hyp2f1(1.0, 1.0 / g, 1.0 + 1.0 / g, -(t**g))
        xs, ys, cum, slopes = self._tx, self._ty, self._tcum, self._tslope
        u = np.minimum(u, xs[-1])
        i = np.clip(np.searchsorted(xs, u, side="right") - 1, 0, len(xs) - 2)
        x0 = xs[i]
        du = u - x0
        return cum[i] + ys[i] * du + slopes[i] * du**2 / 2.0

    def _base_pfm(self, u: np.ndarray) -> np.ndarray:
        """Partial first moment ∫_0^u t J(t) dt, exact, for u >= 0."""
        s = self.scale
        if self.family == "laplace":
            t = u / s
            return (s / 2.0) * (1.0 - (1.0 + t) * np.exp(-t))
        if self.family == "gaussian":
            return s / (2.0 * math.sqrt(math.pi)) * (1.0 - np.exp(-((u / s) ** 2)))
        if self.family == "cauchy":
            g = self.exponent
            c = 1.0 / (2.0 * s * (math.pi / g) / math.sin(math.pi / g))
            t = u / s
            return c * s**2 * t**2 / 2.0 * special.hyp2f1(1.0, 2.0 / g, 1.0 + 2.0 / g, -(t**g))
        xs, ys, cum_t, slopes = self._tx, self._ty, self._tcum_t, self._tslope
        u = np.minimum(u, xs[-1])
        i = np.clip(np.searchsorted(xs, u, side="right") - 1, 0, len(xs) - 2)
        x0, y0, m = xs[i], ys[i], slopes[i]
        return cum_t[i] + (y0 - m * x0) * (u**2 - x0**2) / 2.0 + m * (u**3 - x0**3) / 3.0

    def _base_first_moment(self) -> float:
        s = self.scale
        if self.family == "laplace":
            return s / 2.0
        if self.family == "gaussian":
            return s / (2.0 * math.sqrt(math.pi))
        if self.family == "cauchy":
            g = self.exponent
            if g <= 2.0:
                return math.inf
            c = 1.0 / (2.0 * s * (math.pi / g) / math.sin(math.pi / g))
            return c * s**2 * (math.pi / g) / math.sin(2.0 * math.pi / g)
        return None  # table: resolved by the window loop

    # -- public surface ------------------------------------------------------

    def pdf(self, x) -> np.ndarray:
        r = np.abs(_as_array(x))
        out = self._base_pdf(r)
        if self.n is not None:
            out = out * np.clip(2.0 - r / self.n, 0.0, 1.0)
        return out

    def half_integral(self, u) -> np.ndarray:
        """∫_0^u J(t) dt for u >= 0 (truncation applied if present)."""
        u = np.maximum(_as_array(u), 0.0)
        if self.n is None:
            return self._base_half(u)
        n = self.n
        u1 = np.minimum(u, n)
        out = self._base_half(u1)
        u2 = np.clip(u, n, 2.0 * n)
        hn = self._base_half(np.asarray(n, dtype=float))
        pn = self._base_pfm(np.asarray(n, dtype=float))
        out = out + 2.0 * (self._base_half(u2) - hn) - (self._base_pfm(u2) - pn) / n
        return out

    def cdf(self, x) -> np.ndarray:
        x = _as_array(x)
        return self.mass / 2.0 + np.sign(x) * self.half_integral(np.abs(x))

    def partial_first_moment(self, u) -> np.ndarray:
        """∫_0^u t J(t) dt for u >= 0; truncated kernels integrate numerically."""
        u = np.maximum(_as_array(u), 0.0)
        if self.n is None:
            return self._base_pfm(u)

        def one(ui: float) -> float:
            n = self.n
            tot = 0.0
            for lo, hi in ((0.0, min(ui, n)), (n, min(ui, 2.0 * n))):
                if hi > lo:
                    val, _ = integrate.quad(
                        lambda t: t * float(self.pdf(t)), lo, hi, epsabs=1e-13, epsrel=1e-12
                    )
                    tot += val
            return tot

        return np.vectorize(one)(u)

    @property
    def mass(self) -> float:
        """Total integral; 1 for base families, < 1 once truncated."""
        if self.n is None:
            return 1.0
        return 2.0 * float(self.half_integral(2.0 * self.n))

    @property
    def support_radius(self) -> float:
        r = math.inf
        if self.family == "table":
            r = float(self._tx[-1])
        if self.n is not None:
            r = min(r, 2.0 * self.n)
        return r

    def truncate(self, n: float) -> "Kernel":
        if self.n is not None:
            raise ModelError("kernel is already truncated")
        return replace(self, n=float(n))

    def describe(self) -> dict:
        d = {"family": self.family, "scale": self.scale}
        if self.family == "cauchy":
            d["exponent"] = self.exponent
        if self.family == "table":
            d["points"] = len(self.points)
        if self.n is not None:
            d["n"] = self.n
        return d


def boundary_weight(kernel: Kernel, x) -> np.ndarray:
    """Retained-mass profile at distance x >= 0 inside the habitat.

    Equals the kernel CDF at x, i.e. the fraction of dispersal mass a source
    at depth x keeps on its inner side; 1/2 at the edge, -> mass for x large.
    """
    x = _as_array(x)
    if np.any(x < 0):
        raise ModelError("boundary_weight is defined for x >= 0")
    return kernel.cdf(x)


def first_moment(kernel: Kernel) -> float:
    """∫_0^∞ t J(t) dt, or +inf when the tail is too heavy.

    Closed forms for the analytic families; tabulated and truncated kernels
    are probed over doubling windows 2^k and classified by the increments.
    Raises MomentUndetermined if the window budget cannot classify the tail.
    """
    if kernel.n is None:
        val = kernel._base_first_moment()
        if val is not None:
            return val
    if kernel.support_radius < math.inf and kernel.n is not None:
        return float(kernel.partial_first_moment(kernel.support_radius))
    prev = 0.0
    for k in range(MOMENT_MAX_K + 1):
        cur = float(kernel.partial_first_moment(2.0**k))
        if cur > MOMENT_HUGE:
            return math.inf
        if k > 0 and cur - prev <= MOMENT_RTOL * max(1.0, cur):
            return cur
        prev = cur
    raise MomentUndetermined(
        "first moment undetermined after window 2^%d: partial sums still growing" % MOMENT_MAX_K
    )


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Nonlinearity:
    """Infection/recovery response pair (H, G).

    ``saturating``: H(z) = alpha z/(1+z), G(z) = beta ln(1+z).
    ``linear``:     H(z) = c z with the same saturating G.
    """

    family: str
    alpha: float = 2.0
    beta: float = 2.0
    c: float = 1.0

    def __post_init__(self):
        if self.family not in ("saturating", "linear"):
            raise ModelError(f"unknown nonlinearity family {self.family!r}")
        if self.family == "saturating" and self.alpha <= 0:
            raise ModelError("alpha must be positive")
        if self.family == "linear" and self.c <= 0:
            raise ModelError("c must be positive")
        if self.beta <= 0:
            raise ModelError("beta must be positive")

    def H(self, z):
        z = _as_array(z)
        if self.family == "saturating":
            return self.alpha * z / (1.0 + z)
        return self.c * z

    def G(self, z):
        return self.beta * np.log1p(_as_array(z))

    def dH(self, z):
        z = _as_array(z)
        if self.family == "saturating":
            return self.alpha / (1.0 + z) ** 2
        return np.full_like(z, self.c)

    def dG(self, z):
        return self.beta / (1.0 + _as_array(z))

    @property
    def hp0(self) -> float:
        """Slope of H at zero."""
        return self.alpha if self.family == "saturating" else self.c

    @property
    def gp0(self) -> float:
        return self.beta

    def check_hypotheses(self, a: float, b: float) -> None:
        """Sampled sublinearity and large-argument checks; raises ModelError."""
        z = np.geomspace(1e-6, 1e3, 64)
        if np.any(self.dH(z) <= 0) or np.any(self.dG(z) <= 0):
            raise ModelError("H and G must be strictly increasing")
        hz = self.H(z) / z
        gz = self.G(z) / z
        if np.any(np.diff(hz) > 1e-14):
            raise ModelError("H(z)/z must be nonincreasing")
        if np.any(np.diff(gz) >= 0):
            raise ModelError("G(z)/z must be strictly decreasing")
        vstar = None
        if self.hp0 * self.gp0 > a * b:
            vstar = _positive_root(a, b, self)
        zhat = 10.0 * max(1.0, vstar if vstar is not None else 1.0)
        if not float(self.G(self.H(zhat) / a)) < b * zhat:
            raise ModelError("recovery fails to dominate at large density")


def _positive_root(a_eff: float, b_eff: float, nl: Nonlinearity) -> float:
    """Positive root of G(H(V)/a_eff) = b_eff V; caller checks slope condition."""
    def f(v: float) -> float:
        return float(nl.G(nl.H(v) / a_eff)) - b_eff * v

    hi = 1.0
    for _ in range(80):
        if f(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NoPositiveEquilibrium("no positive equilibrium: G(H(V)/a) stays above bV")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# initial data and parameter sets
# ---------------------------------------------------------------------------

def initial_profile(kind: str, amplitude: float, h0: float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized initial profile on [0, h0], positive inside, zero at h0.

    Kinds: ``tent`` (linear ramp down), ``plateau`` (flat cap with a steep
    linear drop of slope h0 at the front), ``cosine``, ``parabola``.
    """
    if amplitude <= 0:
        raise ModelError("profile amplitude must be positive")
    if h0 <= 0:
        raise ModelError("profile needs h0 > 0")
    if kind == "tent":
        return lambda x: amplitude * np.clip(1.0 - _as_array(x) / h0, 0.0, 1.0)
    if kind == "plateau":
        return lambda x: amplitude * np.clip(h0 * (h0 - _as_array(x)), 0.0, 1.0)
    if kind == "cosine":
        return lambda x: amplitude * np.cos(np.clip(_as_array(x) / h0, 0.0, 1.0) * math.pi / 2.0)
    if kind == "parabola":
        return lambda x: amplitude * np.clip(1.0 - (_as_array(x) / h0) ** 2, 0.0, 1.0)
    raise ModelError(f"unknown profile kind {kind!r}")


@dataclass(frozen=True)
class ModelParams:
    """Full parameter set for the two-component front problem.

    Immutable; all numeric fields are validated on construction, the
    nonlinearity is checked against the sampled shape hypotheses, and the
    initial data must be positive inside [0, h0) and vanish at h0.
    """

    d1: float
    d2: float
    a: float
    b: float
    mu1: float
    mu2: float
    h0: float
    kernel1: Kernel
    kernel2: Kernel
    nonlinearity: Nonlinearity
    u0: Callable[[np.ndarray], np.ndarray]
    v0: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if self.d1 < 0 or self.d2 < 0:
            raise ModelError("dispersal rates must be >= 0")
        if self.d1 + self.d2 <= 0:
            raise ModelError("degenerate pair: d1 + d2 must be positive")
        if self.a <= 0 or self.b <= 0:
            raise ModelError("decay rates a, b must be positive")
        if self.mu1 < 0 or self.mu2 < 0:
            raise ModelError("front response rates mu1, mu2 must be >= 0")
        if self.h0 <= 0:
            raise ModelError("initial front position h0 must be positive")
        self.nonlinearity.check_hypotheses(self.a, self.b)
        xs = np.linspace(0.0, self.h0, 66)[1:-1]
        for name, f in (("u0", self.u0), ("v0", self.v0)):
            vals = _as_array(f(xs))
            if vals.shape != xs.shape or not np.all(np.isfinite(vals)):
                raise ModelError(f"{name} must map [0,h0] arrays to finite arrays")
            if np.any(vals <= 0):
                raise ModelError(f"{name} must be positive on the interior of [0, h0)")
            if abs(float(f(np.array([self.h0]))[0])) > 1e-12:
                raise ModelError(f"{name} must vanish at the front h0")

    def with_updates(self, **kw) -> "ModelParams":
        return replace(self, **kw)


# ---------------------------------------------------------------------------
# derived constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivedConstants:
    """Closed-form threshold constants plus constant equilibrium states.

    ``U, V`` are None when the basic reproduction ratio R0 is at most 1;
    ``Usigma, Vsigma`` are the sigma-perturbed analogues.
    """

    R0: float
    Rstar: float
    gammaA: float
    gammaB: float
    thetaA: float
    thetaB: float
    Lambda: float
    U: float | None
    V: float | None
    Usigma: float | None
    Vsigma: float | None
    sigma: float


def _perron_2x2(a11: float, a12: float, a21: float, a22: float) -> float:
    tr = a11 + a22
    disc = (a11 - a22) ** 2 + 4.0 * a12 * a21
    lam = (tr + math.sqrt(disc)) / 2.0
    # characteristic-polynomial residual guards the closed form
    resid = lam * lam - tr * lam + (a11 * a22 - a12 * a21)
    if abs(resid) > 1e-12 * max(1.0, lam * lam, abs(a11 * a22), a12 * a21):
        raise ModelError("eigenvalue identity residual too large")
    return lam


def equilibrium(params: ModelParams, sigma: float = 0.0) -> tuple[float, float]:
    """Positive constant state of the sigma-perturbed reaction system.

    Reduces to the scalar fixed-point equation G(H(V)/(a+sigma)) = (b+sigma)V,
    brackets the root by doubling and bisects it to machine precision.
    """
    nl = params.nonlinearity
    a_eff, b_eff = params.a + sigma, params.b + sigma
    if a_eff <= 0 or b_eff <= 0:
        raise ModelError("perturbed decay rates must stay positive")
    if nl.hp0 * nl.gp0 <= a_eff * b_eff:
        raise NoPositiveEquilibrium(
            "no positive equilibrium: perturbed reproduction ratio is at most 1"
        )
    v = _positive_root(a_eff, b_eff, nl)
    u = float(nl.H(v)) / a_eff
    scale = max(1.0, u, v)
    if abs(a_eff * u - float(nl.H(v))) > 1e-12 * scale or abs(
        b_eff * v - float(nl.G(u))
    ) > 1e-12 * scale:
        raise ModelError("equilibrium residual exceeded 1e-12")
    return u, v


def derived_constants(params: ModelParams, sigma: float = 0.0) -> DerivedConstants:
    """All closed-form constants at one perturbation level sigma."""
    nl = params.nonlinearity
    a, b, d1, d2 = params.a, params.b, params.d1, params.d2
    hp, gp = nl.hp0, nl.gp0
    gammaA = _perron_2x2(-a, hp, gp, -b)
    gammaB = _perron_2x2(-a - d1 / 2.0, hp, gp, -b - d2 / 2.0)
    thetaA = hp / (gammaA + a)
    thetaB = hp / (gammaB + a + d1 / 2.0)
    R0 = hp * gp / (a * b)
    Rstar = hp * gp / ((a + d1 / 2.0) * (b + d2 / 2.0))
    Lam = 2.0 * (hp * gp - a * b) / a
    U = V = Us = Vs = None
    if R0 > 1.0:
        U, V = equilibrium(params, 0.0)
    if hp * gp > (a + sigma) * (b + sigma):
        if sigma == 0.0:
            Us, Vs = U, V
        else:
            Us, Vs = equilibrium(params, sigma)
    return DerivedConstants(
        R0=R0, Rstar=Rstar, gammaA=gammaA, gammaB=gammaB,
        thetaA=thetaA, thetaB=thetaB, Lambda=Lam,
        U=U, V=V, Usigma=Us, Vsigma=Vs, sigma=sigma,
    )
