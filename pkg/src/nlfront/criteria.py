"""Threshold finders for the spreading/vanishing dichotomy.

Every regime boundary the theory provides is located here: the critical
front length, the critical front-response rate along a link mu2 = f(mu1),
and the dispersal-rate thresholds in their four regimes, plus a decision
tree that reports the verdict closed forms alone can settle.

Eigenvalue-backed thresholds bisect on the sign of a principal eigenvalue
and are cheap; the mu threshold has no spectral characterization and is
bracketed by full simulations, so it is the only expensive search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import eigen, freeboundary
from .grids import default_cells
from .model import ModelParams, derived_constants

SIGN_TOL = 1e-6            # |eigenvalue| certificate target at a threshold
WIDTH_FRAC = 1e-4          # bracket width <= WIDTH_FRAC * max(1, value)
MU_BOUNDS = (1e-4, 1e3)    # search limits for the front-response threshold
MU_MAX_ITERS = 20
ROOT_PAD = 1e-9            # synthetic bracket half-width for closed-form roots

THRESHOLD_NAMES = ("ell_star", "mu1_star", "d1_star", "d1_hat", "d1_tilde", "d2_under")
D_MODES = ("linked", "fixed_d2_small", "fixed_d2_mid", "fixed_d2_large")


# ---------------------------------------------------------------------------
# result records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdResult:
    """A located regime boundary with its bracket and flip certificate."""

    name: str
    value: float
    bracket: tuple[float, float]
    certificate: dict

    def __post_init__(self):
        if self.name not in THRESHOLD_NAMES:
            raise ValueError(f"unknown threshold name {self.name!r}")
        lo, hi = self.bracket
        if not (lo <= self.value <= hi):
            raise ValueError("threshold value must lie inside its bracket")

    @property
    def width_ok(self) -> bool:
        lo, hi = self.bracket
        return (hi - lo) <= WIDTH_FRAC * max(1.0, abs(self.value))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": float(self.value),
            "bracket": [float(self.bracket[0]), float(self.bracket[1])],
            "width_ok": self.width_ok,
            "certificate": _jsonable(self.certificate),
        }


@dataclass(frozen=True)
class DThresholdReport:
    """Outcome of a dispersal-rate threshold search in one regime mode."""

    mode: str
    thresholds: tuple[ThresholdResult, ...]
    extras: dict
    note: str
    samples: tuple[tuple[float, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "thresholds": [t.to_dict() for t in self.thresholds],
            "extras": _jsonable(self.extras),
            "note": self.note,
            "samples": [[float(d), float(lam)] for d, lam in self.samples],
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


# ---------------------------------------------------------------------------
# elementary searches
# ---------------------------------------------------------------------------

def _bisect_eigen(f: Callable[[float], float], lo: float, hi: float,
                  f_lo: float, f_hi: float) -> tuple[float, float, tuple[float, float], float, float]:
    """Sign bisection of a monotone eigenvalue curve with a two-sided stop."""
    if not (f_lo > 0) != (f_hi > 0):
        raise RuntimeError("eigenvalue bisection needs a sign change across the bracket")
    mid, f_mid = lo, f_lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        if abs(f_mid) < SIGN_TOL and (hi - lo) <= 0.5 * WIDTH_FRAC * max(1.0, mid):
            break
    return mid, f_mid, (lo, hi), f_lo, f_hi


def _closed_form_root(g: Callable[[float], float], lo: float, hi: float) -> float:
    return float(brentq(g, lo, hi, xtol=1e-13, rtol=8.9e-16))


def _validate_link(link: Callable[[float], float]) -> None:
    if abs(float(link(0.0))) > 0.0:
        raise ValueError("link must map 0 to 0")
    probes = [float(link(s)) for s in (0.5, 1.0, 2.0)]
    if not (0.0 < probes[0] < probes[1] < probes[2]):
        raise ValueError("link must be strictly increasing and positive")


# ---------------------------------------------------------------------------
# critical front length
# ---------------------------------------------------------------------------

def find_ell_star(params: ModelParams) -> ThresholdResult:
    """Critical initial length: the root of the principal eigenvalue in l.

    Only defined in the squeeze regime (Rstar < 1 < R0); outside it the
    eigenvalue has one sign for every length and the search refuses to run.
    """
    cons = derived_constants(params)
    if cons.Rstar >= 1.0:
        raise ValueError("no threshold, spreading for all h0")
    if cons.R0 <= 1.0:
        raise ValueError("no threshold, vanishing")
    crit = eigen.critical_length(params, lam_tol=5e-7)
    if abs(crit.lam_at_value) > SIGN_TOL:
        raise RuntimeError(
            f"critical length certificate out of tolerance: |lambda| = {abs(crit.lam_at_value):.3e}"
        )
    below = eigen.lambda1(crit.value - 0.01, params, num_cells=crit.num_cells)
    above = eigen.lambda1(crit.value + 0.01, params, num_cells=crit.num_cells)
    cert = {
        "kind": "eigenvalue",
        "quantity": "lambda1(l)",
        "at_value": crit.lam_at_value,
        "below": below,
        "above": above,
        "probe_offset": 0.01,
        "num_cells": crit.num_cells,
    }
    return ThresholdResult("ell_star", crit.value, crit.bracket, cert)


# ---------------------------------------------------------------------------
# front-response threshold (simulation-backed)
# ---------------------------------------------------------------------------

def _with_mu(params: ModelParams, mu1: float, link: Callable[[float], float]) -> ModelParams:
    return replace(params, mu1=mu1, mu2=float(link(mu1)))


def _seed_mu_lower(params: ModelParams, ell: float, link: Callable[[float], float]) -> float:
    """Constructive lower bound on the response sum that forces retreat.

    Builds the decaying barrier from the eigenpair at a slightly enlarged
    domain: with eps keeping h0(1+eps) below the critical length, decay rate
    delta from the (negative) eigenvalue there, and M scaling the
    eigenfunction over the initial data, any mu1 + mu2 below
    eps*delta*h0 / (M*h1) keeps the front trapped.
    """
    h0 = params.h0
    eps = min(0.05, 0.5 * (ell / h0 - 1.0))
    h1 = h0 * (1.0 + eps)
    cells = default_cells(h1)
    pair = eigen.principal_eigenpair(eigen.lambda1_spec(h1, params, cells))
    if pair.lambda_p >= 0.0:
        raise RuntimeError("barrier construction needs a negative eigenvalue above h0")
    delta = -pair.lambda_p
    scale = max(float(pair.phi1.max()), float(pair.phi2.max()))
    phi1 = pair.phi1 / scale
    phi2 = pair.phi2 / scale
    u0 = np.asarray(params.u0(pair.x), dtype=float)
    v0 = np.asarray(params.v0(pair.x), dtype=float)
    big = max(float(np.max(u0 / phi1)), float(np.max(v0 / phi2)), 1.0)
    mu_sum = eps * delta * h0 / (big * h1)
    if float(link(mu_sum)) <= 0.0:
        raise ValueError("link must be positive on positive inputs")
    # split the sum bound along the link: largest mu1 with mu1 + f(mu1) <= bound
    return _closed_form_root(lambda m: m + float(link(m)) - mu_sum, 0.0, mu_sum)


def find_mu_star(params: ModelParams, link: Callable[[float], float] | None = None,
                 *, t_max: float = 500.0, dx: float = 0.05,
                 sample_interval: float = 1.0) -> ThresholdResult:
    """Critical front response along mu2 = link(mu1), by verdict bisection.

    Requires h0 below the critical length (otherwise spreading happens for
    every positive response and no threshold exists).  Classification runs
    are the only oracle; probes that stay undecided at t_max stop the
    shrink and leave the honest, wider bracket in the result.
    """
    if link is None:
        link = lambda s: s
    _validate_link(link)
    ell = find_ell_star(params)
    if params.h0 >= ell.value:
        raise ValueError(
            "threshold undefined: h0 at or above the critical length, "
            "spreading for every positive front response"
        )

    def verdict(mu1: float) -> freeboundary.Outcome:
        probe = _with_mu(params, mu1, link)
        return freeboundary.classify(
            probe, t_max=t_max, dx=dx, sample_interval=sample_interval
        )

    lo = max(MU_BOUNDS[0], _seed_mu_lower(params, ell.value, link))
    out_lo = verdict(lo)
    while out_lo.verdict != "vanishing":
        if lo <= MU_BOUNDS[0]:
            raise RuntimeError(
                "bracket failure: no vanishing verdict down to the lower search "
                f"bound {MU_BOUNDS[0]:g} (last verdict {out_lo.verdict!r} at "
                f"mu1={lo:g}: {out_lo.message})"
            )
        lo = max(MU_BOUNDS[0], lo / 4.0)
        out_lo = verdict(lo)

    hi = max(1.0, 4.0 * lo)
    out_hi = verdict(hi)
    while out_hi.verdict != "spreading":
        hi *= 2.0
        if hi > MU_BOUNDS[1]:
            raise RuntimeError(
                "bracket failure: no spreading verdict up to the upper search "
                f"bound {MU_BOUNDS[1]:g} (last verdict {out_hi.verdict!r} at "
                f"mu1={hi / 2.0:g}: {out_hi.message})"
            )
        out_hi = verdict(hi)

    undecided = None
    for _ in range(MU_MAX_ITERS):
        if (hi - lo) <= WIDTH_FRAC * max(1.0, 0.5 * (lo + hi)):
            break
        mid = 0.5 * (lo + hi)
        out = verdict(mid)
        if out.verdict == "spreading":
            hi = mid
        elif out.verdict == "vanishing":
            lo = mid
        else:
            undecided = mid
            break

    value = 0.5 * (lo + hi)
    below = verdict(0.9 * value)
    above = verdict(1.1 * value)
    cert = {
        "kind": "verdicts",
        "below": below.verdict,
        "above": above.verdict,
        "probes": (0.9 * value, 1.1 * value),
        "t_decided": (below.t_decided, above.t_decided),
        "t_max": t_max,
    }
    if undecided is not None:
        cert["undecided_at"] = undecided
    return ThresholdResult("mu1_star", value, (lo, hi), cert)


# ---------------------------------------------------------------------------
# dispersal-rate thresholds
# ---------------------------------------------------------------------------

def nu1(d2: float, params: ModelParams, h0: float | None = None) -> float:
    """Small-d1 limit of the principal eigenvalue, as a function of d2.

    Closed form through the scalar leakage eigenvalue kappa1 of the second
    kernel on [0, h0]; strictly decreasing in d2 with limit -a.
    """
    if d2 <= 0:
        raise ValueError("d2 must be positive")
    l = params.h0 if h0 is None else h0
    kappa = eigen.scalar_principal(1.0, 0.0, params.kernel2, l)
    return _nu1_from_kappa(d2, kappa, params)


def _nu1_from_kappa(d2: float, kappa: float, params: ModelParams) -> float:
    a, b = params.a, params.b
    nl = params.nonlinearity
    s = a + b - d2 * kappa
    disc = s * s - 4.0 * (a * (b - d2 * kappa) - nl.hp0 * nl.gp0)
    return 0.5 * (-s + math.sqrt(disc))


def _rstar(d1: float, d2: float, params: ModelParams) -> float:
    nl = params.nonlinearity
    return nl.hp0 * nl.gp0 / ((params.a + d1 / 2.0) * (params.b + d2 / 2.0))


def _reproduction_root(params: ModelParams, d2_of: Callable[[float], float]) -> float:
    """Unique d1 with perturbed reproduction ratio exactly 1 (R0 > 1 assumed)."""
    g = lambda d: _rstar(d, float(d2_of(d)), params) - 1.0
    hi = 1.0
    while g(hi) >= 0.0:
        hi *= 2.0
        if hi > 1e9:
            raise RuntimeError("reproduction ratio failed to cross 1")
    return _closed_form_root(g, 0.0, hi)


def _d1_eigen_threshold(params: ModelParams, name: str, lo: float,
                        d2_of: Callable[[float], float]) -> ThresholdResult:
    """Root in d1 of the slope-normalized eigenvalue at fixed length h0."""
    cells = default_cells(params.h0)

    def lam2(d1: float) -> float:
        probe = replace(params, d1=d1, d2=float(d2_of(d1)))
        return eigen.lambda2(params.h0, probe, num_cells=cells)

    f_lo = lam2(lo)
    if f_lo <= 0.0:
        raise RuntimeError(
            f"no positive eigenvalue at the lower end d1={lo:g}; threshold {name} undefined"
        )
    hi = max(1.0, 2.0 * lo)
    f_hi = lam2(hi)
    while f_hi >= 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError("eigenvalue failed to turn negative at large d1")
        f_hi = lam2(hi)
    value, f_mid, bracket, f_lo, f_hi = _bisect_eigen(lam2, lo, hi, f_lo, f_hi)
    if abs(f_mid) > SIGN_TOL:
        raise RuntimeError(
            f"threshold certificate out of tolerance: |lambda2| = {abs(f_mid):.3e}"
        )
    cert = {
        "kind": "eigenvalue",
        "quantity": "lambda2(h0, d1)",
        "at_value": f_mid,
        "below": f_lo,
        "above": f_hi,
        "num_cells": cells,
    }
    return ThresholdResult(name, value, bracket, cert)


def _d2_under_threshold(params: ModelParams, kappa: float, Lam: float) -> ThresholdResult:
    """Root of the small-d1 eigenvalue limit in d2, above Lambda."""
    g = lambda d2: _nu1_from_kappa(d2, kappa, params)
    if g(Lam) <= 0.0:
        raise RuntimeError("expected a positive small-d1 limit at d2 = Lambda")
    hi = 2.0 * max(Lam, 1.0)
    while g(hi) >= 0.0:
        hi *= 2.0
        if hi > 1e9:
            raise RuntimeError("small-d1 eigenvalue limit failed to turn negative")
    root = _closed_form_root(g, Lam, hi)
    pad = ROOT_PAD * max(1.0, root)
    cert = {
        "kind": "eigenvalue",
        "quantity": "nu1(d2)",
        "at_value": g(root),
        "below": g(root - pad),
        "above": g(root + pad),
        "kappa1": kappa,
    }
    return ThresholdResult("d2_under", root, (root - pad, root + pad), cert)


def find_d_thresholds(params: ModelParams, mode: str,
                      link: Callable[[float], float] | None = None) -> DThresholdReport:
    """Dispersal-rate thresholds in one of the four regime modes.

    linked: d2 = link(d1); locate the reproduction boundary in d1, then the
    eigenvalue root above it.  fixed_d2_small / _mid / _large: d2 is taken
    from params and must sit in the regime the mode names (below Lambda,
    between Lambda and the root of the small-d1 limit, or above that root);
    a mismatch raises an error naming the correct mode.
    """
    if mode not in D_MODES:
        raise ValueError(f"unknown mode {mode!r}; choose one of {D_MODES}")
    cons = derived_constants(params)
    if cons.R0 <= 1.0:
        raise ValueError("dispersal thresholds need reproduction ratio above 1")
    Lam = cons.Lambda

    if mode == "linked":
        if link is None:
            link = lambda s: s
        _validate_link(link)
        d1_repro = _reproduction_root(params, link)
        star = _d1_eigen_threshold(params, "d1_star", d1_repro, link)
        return DThresholdReport(
            mode=mode,
            thresholds=(star,),
            extras={"d1_reproduction": d1_repro, "Lambda": Lam},
            note="spreading up to the eigenvalue root; beyond it the front "
                 "response rates decide",
        )

    d2 = params.d2
    kappa = eigen.scalar_principal(1.0, 0.0, params.kernel2, params.h0)

    def correct_mode() -> str:
        if d2 < Lam:
            return "fixed_d2_small"
        d2u = _d2_under_threshold(params, kappa, Lam).value
        return "fixed_d2_mid" if d2 < d2u else "fixed_d2_large"

    if mode == "fixed_d2_small":
        if not d2 < Lam:
            raise ValueError(
                f"mode fixed_d2_small needs d2 < {Lam:.6g}, got d2 = {d2:g}; "
                f"use {correct_mode()}"
            )
        d1_repro = _reproduction_root(params, lambda _d: d2)
        hat = _d1_eigen_threshold(params, "d1_hat", d1_repro, lambda _d: d2)
        return DThresholdReport(
            mode=mode,
            thresholds=(hat,),
            extras={"d1_reproduction": d1_repro, "Lambda": Lam},
            note="spreading up to the eigenvalue root; beyond it the front "
                 "response rates decide",
        )

    under = _d2_under_threshold(params, kappa, Lam)

    if mode == "fixed_d2_mid":
        if not (Lam <= d2 < under.value):
            raise ValueError(
                f"mode fixed_d2_mid needs {Lam:.6g} <= d2 < {under.value:.6g}, "
                f"got d2 = {d2:g}; use {correct_mode()}"
            )
        lo = 1e-3
        while eigen.lambda2(params.h0, replace(params, d1=lo),
                            num_cells=default_cells(params.h0)) <= 0.0:
            lo /= 10.0
            if lo < 1e-8:
                raise RuntimeError("no positive eigenvalue at small d1")
        tilde = _d1_eigen_threshold(params, "d1_tilde", lo, lambda _d: d2)
        return DThresholdReport(
            mode=mode,
            thresholds=(under, tilde),
            extras={"Lambda": Lam, "kappa1": kappa},
            note="spreading up to the eigenvalue root; beyond it the front "
                 "response rates decide",
        )

    # fixed_d2_large
    if not d2 >= under.value:
        raise ValueError(
            f"mode fixed_d2_large needs d2 >= {under.value:.6g}, got d2 = {d2:g}; "
            f"use {correct_mode()}"
        )
    samples = tuple(
        (d1, eigen.lambda1(params.h0, replace(params, d1=d1)))
        for d1 in (0.01, 1.0, 100.0)
    )
    return DThresholdReport(
        mode=mode,
        thresholds=(under,),
        extras={"Lambda": Lam, "kappa1": kappa},
        note="eigenvalue negative for all d1; outcome governed by the front "
             "response rates",
        samples=samples,
    )


# ---------------------------------------------------------------------------
# decision tree
# ---------------------------------------------------------------------------

def _initial_mass(params: ModelParams, num_points: int = 20000) -> float:
    """Weighted initial mass: integral of u0 + (H'(0)/b) v0 on [0, h0]."""
    dx = params.h0 / num_points
    x = (np.arange(num_points) + 0.5) * dx
    u0 = np.asarray(params.u0(x), dtype=float)
    v0 = np.asarray(params.v0(x), dtype=float)
    return float(np.sum(u0 + params.nonlinearity.hp0 / params.b * v0) * dx)


def _front_bound(params: ModelParams) -> dict:
    """Closed-form ceiling on the front position in the subcritical regime."""
    terms = []
    if params.mu1 > 0:
        terms.append(params.d1 / params.mu1)
    if params.mu2 > 0:
        terms.append(params.nonlinearity.hp0 * params.d2 / (params.b * params.mu2))
    mass0 = _initial_mass(params)
    if terms:
        h_limit = params.h0 + mass0 / min(terms)
    else:
        h_limit = params.h0
    return {"kind": "front_bound", "mass_initial": mass0, "h_limit": h_limit}


def decision_tree(params: ModelParams) -> dict:
    """Regime report from closed forms and eigenvalue signs alone.

    Deterministic and total: every valid parameter set maps to a verdict
    of vanishing, spreading, or mu_dependent, with the certificates the
    verdict rests on.  No time-stepping is run.
    """
    cons = derived_constants(params)
    report: dict = {
        "verdict": None,
        "R0": float(cons.R0),
        "Rstar": float(cons.Rstar),
        "gammaA": float(cons.gammaA),
        "gammaB": float(cons.gammaB),
        "thresholds": [],
        "certificates": [],
    }
    if cons.R0 <= 1.0:
        report["verdict"] = "vanishing"
        report["certificates"].append(_jsonable(_front_bound(params)))
        return report
    if cons.Rstar >= 1.0:
        report["verdict"] = "spreading"
        report["certificates"].append(
            {"kind": "reproduction", "Rstar": float(cons.Rstar),
             "gammaB": float(cons.gammaB)}
        )
        return report
    ell = find_ell_star(params)
    report["ell_star"] = float(ell.value)
    report["thresholds"].append(ell.to_dict())
    lam_h0 = eigen.lambda1(params.h0, params)
    report["certificates"].append(
        {"kind": "eigenvalue", "quantity": "lambda1(h0)", "value": float(lam_h0)}
    )
    report["verdict"] = "spreading" if lam_h0 >= 0.0 else "mu_dependent"
    return report
