"""Majorant series controlling the Lie-Schwinger expansion and the resulting radius estimate."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import mpmath
import numpy as np
from scipy.optimize import brentq

from .errors import OutOfDiskError, PreconditionError, RootBracketError

DEFAULT_DELTA = 0.5
_MP_DPS = 60


def bj_coefficients(v_norm: float, a: float, j_max: int) -> list[float]:
    """``B_1 = v_norm`` and ``B_j = (1/a) Σ_{k=1}^{j-1} B_{j-k} B_k`` for ``j ≤ j_max``."""
    if v_norm <= 0 or a <= 0:
        raise PreconditionError("v_norm and a must be positive")
    b = [0.0, float(v_norm)]
    for j in range(2, j_max + 1):
        b.append(sum(b[j - k] * b[k] for k in range(1, j)) / a)
    return b[1:]


def majorant_function(v_norm: float, a: float, x):
    """Generating function ``(a/2)(1 - sqrt(1 - 4 v x / a))`` of the ``B_j``."""
    return 0.5 * a * (1.0 - np.sqrt(1.0 - 4.0 * v_norm * x / a))


def bj_closed_form(v_norm, a, j):
    """``B_j = a C_{j-1} (v/a)^j`` with Catalan numbers ``C_n``, as an mpmath number."""
    v = mpmath.mpf(v_norm)
    a = mpmath.mpf(a)
    n = j - 1
    catalan = mpmath.binomial(2 * n, n) / (n + 1)
    return a * catalan * (v / a) ** j


def bj_tail(v_norm: float, a: float, tau_abs: float, j: int) -> float:
    """``Σ_{j' > j} tau_abs^{j'-1} B_{j'}`` from the closed form minus the partial sum.

    Evaluated in extended precision so the subtraction does not lose digits.
    """
    if v_norm <= 0 or a <= 0:
        raise PreconditionError("v_norm and a must be positive")
    if tau_abs < 0:
        raise PreconditionError("tau_abs must be non-negative")
    if tau_abs >= a / (4.0 * v_norm):
        raise OutOfDiskError(f"|tau| = {tau_abs:g} outside the majorant disk a/(4v) = {a / (4 * v_norm):g}")
    if tau_abs == 0:
        return 0.0
    with mpmath.workdps(_MP_DPS):
        t = mpmath.mpf(tau_abs)
        v = mpmath.mpf(v_norm)
        am = mpmath.mpf(a)
        total = am / 2 * (1 - mpmath.sqrt(1 - 4 * v * t / am)) / t
        partial = mpmath.fsum(bj_closed_form(v_norm, a, i) * t ** (i - 1) for i in range(1, j + 1))
        tail = total - partial
        if tail < 0:
            tail = mpmath.mpf(0)
        return float(tail)


# ---------------------------------------------------------------------------
# radius of the certified disk


def a_equation(a: float, c: float) -> float:
    x = 2.0 * c * a
    return math.expm1(x) + (math.expm1(x) - x) / a - 1.0


def gap_series(tau_abs: float, rel_tol: float = 1e-14, max_terms: int = 100000) -> float:
    """``Σ_{j≥1} (j+1) |τ|^{(j-1)/4}`` summed until the relative tail is below ``rel_tol``."""
    y = tau_abs**0.25
    if y >= 1:
        return math.inf
    total = 0.0
    for j in range(1, max_terms):
        term = (j + 1) * y ** (j - 1)
        total += term
        # remaining terms are bounded by a geometric series with ratio y (j+2)/(j+1)
        ratio = y * (j + 2) / (j + 1)
        if ratio < 1 and term * ratio / (1 - ratio) < rel_tol * total:
            return total
    raise PreconditionError("gap series did not reach its tolerance")


def gap_series_closed(tau_abs: float) -> float:
    y = tau_abs**0.25
    return y / (1 - y) ** 2 + 2 / (1 - y)


def delta_of_tau(tau_abs: float) -> float:
    """``(1 - 8|τ| Σ (j+1)|τ|^{(j-1)/4}) / 2``; negative once the bound is vacuous."""
    if tau_abs == 0:
        return 0.5
    s = gap_series(tau_abs)
    return 0.5 * (1.0 - 8.0 * tau_abs * s)


def resolvent_bound(tau_abs: float) -> float:
    """Upper bound on the reduced resolvent norm for ``|z| ≤ 1/2``.

    Returned literally, so it is negative when the hypothesis of the bound fails.
    """
    return 1.0 / delta_of_tau(tau_abs)


@dataclass(frozen=True)
class TauDomainEstimate:
    a_root: float
    c: float
    t0: float
    delta: float
    residual: float
    delta_at_t0: float
    self_consistent: bool
    max_seed_weighted_norm: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def solve_a_equation(c: float, hi: float = 1.0) -> float:
    if c <= 0:
        raise RootBracketError("c must be positive")
    lo = 1e-12
    if a_equation(lo, c) >= 0:
        raise RootBracketError("a-equation is non-negative at the lower bracket")
    while a_equation(hi, c) <= 0:
        hi *= 2
        if hi > 1e6:
            raise RootBracketError("could not bracket the a-equation root")
    return brentq(a_equation, lo, hi, args=(c,), xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def tau_domain_estimate(spec=None, delta: float = DEFAULT_DELTA) -> TauDomainEstimate:
    """Radius ``t0 = a/4`` with ``a`` the root of the a-equation at ``c = (2+√2)/Δ``."""
    if not delta > 0:
        raise RootBracketError("delta must be positive")
    c = (2.0 + math.sqrt(2.0)) / delta
    a = solve_a_equation(c)
    t0 = a / 4.0
    d0 = delta_of_tau(t0)
    max_norm = None
    if spec is not None:
        from .operators import weighted_norm
        max_norm = max((weighted_norm(op, spec) for op in spec.seed_potentials), default=0.0)
    return TauDomainEstimate(a_root=a, c=c, t0=t0, delta=delta, residual=abs(a_equation(a, c)),
                             delta_at_t0=d0, self_consistent=bool(d0 > 0),
                             max_seed_weighted_norm=max_norm)


def thermo_majorant(n: int, tau_abs: float) -> float:
    """``(2/N) Σ_{l≤N} l|τ|^{(l-1)/4} + 2 Σ_{l>N} |τ|^{(l-1)/4}``."""
    y = tau_abs**0.25
    head = sum(l * y ** (l - 1) for l in range(1, n + 1))
    if y >= 1:
        return math.inf
    return 2.0 / n * head + 2.0 * y**n / (1.0 - y)
