"""Certification of ARK methods: order conditions, linear stability, flags.

Algebraic order checks cover orders 1-3 (all bicolored trees). Methods that
declare order 4 or 5 are additionally measured by convergence on the split
oscillator.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import linear_sum_assignment

from .tableaux import ARKMethod, ButcherTableau

ORDER_TOL = 1e-12
SA_TOL = 1e-13
A_STAB_SLACK = 1e-9
Y_SLACK = 1e-10
Y_GRID = 1e-4


class SingularStageError(ArithmeticError):
    pass


# --- order conditions --------------------------------------------------------------

@dataclass
class OrderCheck:
    passed: bool
    residuals: list[tuple[str, float]]

    @property
    def max_residual(self) -> float:
        return max((r for _, r in self.residuals), default=0.0)


def _pair(method: ARKMethod):
    ex = method.explicit
    im = method.explicit if method.is_pure_explicit else method.implicit
    return ({"E": ex.A, "I": im.A}, {"E": ex.b, "I": im.b}, {"E": ex.c, "I": im.c})


def order_condition_residuals(As, bs, cs, order: int, colors=("E", "I")):
    """(label, |lhs - rhs|) for every condition of exactly ``order``."""
    out = []
    for s in colors:
        if order == 1:
            out.append((f"b{s}.1", abs(bs[s].sum() - 1.0)))
        for n in colors:
            if order == 2:
                out.append((f"b{s}.c{n}", abs(bs[s] @ cs[n] - 0.5)))
        if order == 3:
            for n, mu in itertools.combinations_with_replacement(colors, 2):
                out.append((f"b{s}.(c{n}*c{mu})", abs(bs[s] @ (cs[n] * cs[mu]) - 1.0 / 3.0)))
            for n, mu in itertools.product(colors, repeat=2):
                out.append((f"b{s}.A{n}c{mu}", abs(bs[s] @ (As[n] @ cs[mu]) - 1.0 / 6.0)))
    return out


def check_order_conditions(method: ARKMethod, target_order: int) -> OrderCheck:
    """All standalone and coupling conditions through ``target_order`` (<= 3)."""
    if target_order not in (1, 2, 3):
        raise ValueError("target_order must be 1, 2 or 3")
    As, bs, cs = _pair(method)
    res = []
    for p in range(1, target_order + 1):
        res += order_condition_residuals(As, bs, cs, p)
    return OrderCheck(all(r <= ORDER_TOL for _, r in res), res)


def _algebraic_order(As, bs, cs, colors) -> int:
    order = 0
    for p in (1, 2, 3):
        if all(r <= ORDER_TOL for _, r in order_condition_residuals(As, bs, cs, p, colors)):
            order = p
        else:
            break
    return order


def algebraic_orders(method: ARKMethod) -> tuple[int, int, int]:
    """(explicit, implicit, coupled) orders, each capped at 3."""
    As, bs, cs = _pair(method)
    return (_algebraic_order(As, bs, cs, ("E",)), _algebraic_order(As, bs, cs, ("I",)),
            _algebraic_order(As, bs, cs, ("E", "I")))


def empirical_order(method: ARKMethod, problem=None, ladder=None, t_final=None) -> float:
    """Measured beta from a convergence run (split oscillator by default).

    The default ladder is T * {1/10, 1/20, 1/40, 1/80} with T = 2 pi / omega,
    omega the total rotation rate, over two periods.
    """
    from .harness.converge import run_convergence
    from .models import SplitOscillator
    problem = problem or SplitOscillator(1.0, 10.0)
    if ladder is None:
        omega = abs(problem.omega_E + problem.omega_I)
        period = 2 * math.pi / omega
        ladder = [period / 10, period / 20, period / 40, period / 80]
        t_final = 2 * period
    report = run_convergence(method, problem, ladder, t_final)
    if report.beta is None:
        raise RuntimeError(f"{method.name}: fewer than two errors above the round-off floor")
    return report.beta


# --- stability functions ------------------------------------------------------------

def stability_values(tab: ButcherTableau, z) -> np.ndarray:
    """R(z) for an array of z by stage recursion (lower-triangular A)."""
    z = np.asarray(z, dtype=complex)
    A, b = tab.A, tab.b
    Y = []
    for i in range(tab.stages):
        acc = np.ones_like(z)
        for j in range(i):
            if A[i, j] != 0.0:
                acc = acc + z * A[i, j] * Y[j]
        den = 1.0 - z * A[i, i]
        if np.any(den == 0):
            raise SingularStageError(f"I - zA is singular (stage {i + 1})")
        Y.append(acc / den if A[i, i] != 0.0 else acc)
    tot = np.zeros_like(z)
    for j in range(tab.stages):
        if b[j] != 0.0:
            tot = tot + b[j] * Y[j]
    return 1.0 + z * tot


def dirk_stability_function(tab: ButcherTableau, z: complex) -> complex:
    """R(z) = 1 + z b^T (I - zA)^{-1} 1."""
    return complex(stability_values(tab, np.array([z]))[0])


def rational_form(tab: ButcherTableau) -> tuple[np.ndarray, np.ndarray]:
    """Numerator and denominator of R(z) as ascending coefficient arrays.

    The stage recursion is carried out on polynomials: with
    D_i = prod_{k<=i} (1 - z a_kk), the scaled stage P_i = Y_i D_i obeys
    P_i = D_{i-1} + z sum_{j<i} a_ij P_j prod_{j<k<i} (1 - z a_kk).
    Zero diagonal entries (explicit first stage) contribute factors of 1,
    so structurally zero first rows need no special handling.
    """
    A, b, s = tab.A, tab.b, tab.stages
    fac = [np.array([1.0, -A[i, i]]) for i in range(s)]

    def prod(lo, hi):
        p = np.array([1.0])
        for k in range(lo, hi):
            p = npoly.polymul(p, fac[k])
        return p

    P = []
    for i in range(s):
        acc = prod(0, i)
        for j in range(i):
            if A[i, j] != 0.0:
                term = npoly.polymul([0.0, A[i, j]], npoly.polymul(P[j], prod(j + 1, i)))
                acc = npoly.polyadd(acc, term)
        P.append(acc)
    den = prod(0, s)
    num = den.copy()
    for j in range(s):
        if b[j] != 0.0:
            num = npoly.polyadd(num, npoly.polymul([0.0, b[j]], npoly.polymul(P[j], prod(j + 1, s))))
    return num, den


def _trim(p: np.ndarray, rel: float = 1e-12) -> np.ndarray:
    scale = max(np.max(np.abs(p)), 1.0)
    k = len(p)
    while k > 1 and abs(p[k - 1]) <= rel * scale:
        k -= 1
    return p[:k]


def stability_at_infinity(tab: ButcherTableau) -> float:
    """lim |R(z)| as z -> -inf from the degrees of numerator and denominator."""
    num, den = (_trim(p) for p in rational_form(tab))
    if len(num) > len(den):
        return math.inf
    if len(num) < len(den):
        return 0.0
    return abs(num[-1] / den[-1])


def check_a_stability(tab: ButcherTableau, n_samples: int = 4000) -> bool:
    """|R(iy)| <= 1 + 1e-9 on a geometric sample of y in [1e-3, 1e6].

    Requires nonnegative diagonal entries so that R has no poles in the
    left half-plane (maximum principle).
    """
    if np.any(np.diag(tab.A) < 0):
        return False
    y = np.geomspace(1e-3, 1e6, n_samples)
    return bool(np.max(np.abs(stability_values(tab, 1j * y))) <= 1.0 + A_STAB_SLACK)


def check_l_stability(tab: ButcherTableau) -> bool:
    return check_a_stability(tab) and stability_at_infinity(tab) <= 1e-12


def check_algebraic_stability(tab: ButcherTableau) -> bool:
    b, A = tab.b, tab.A
    if np.any(b < 0):
        return False
    M = np.diag(b) @ A + A.T @ np.diag(b) - np.outer(b, b)
    return bool(np.min(np.linalg.eigvalsh(M)) >= -1e-12)


# --- explicit stability polynomial ---------------------------------------------------

def stability_polynomial(tab: ButcherTableau) -> np.ndarray:
    """Ascending coefficients p_k = b^T A^{k-1} 1 of P(z) (p_0 = 1)."""
    coeffs = [1.0]
    v = np.ones(tab.stages)
    for _ in range(tab.stages):
        coeffs.append(float(tab.b @ v))
        v = tab.A @ v
    return _trim(np.array(coeffs), 1e-15)


def _modulus_excess(tab: ButcherTableau) -> np.ndarray:
    """Ascending coefficients of |P(iy)|^2 - 1 as a polynomial in y."""
    p = stability_polynomial(tab)
    q = p * (1j ** np.arange(len(p)))
    e = npoly.polymul(q, np.conj(q)).real
    e[0] -= 1.0
    return e


def max_imag_stable_step(tab: ButcherTableau) -> float:
    """Largest y with |P(iy')| <= 1 + 1e-10 on [0, y] (grid 1e-4, then bisection).

    If the lowest-order nonzero coefficient of |P(iy)|^2 - 1 is positive the
    method is unstable arbitrarily close to the origin and 0 is returned.
    """
    e = _modulus_excess(tab)
    scale = max(np.max(np.abs(e)), 1.0)
    nz = np.nonzero(np.abs(e) > 1e-12 * scale)[0]
    if len(nz) == 0:
        return math.inf
    if e[nz[0]] > 0:
        return 0.0

    def ok(y):
        return np.abs(stability_values(tab, 1j * np.asarray(y))) <= 1.0 + Y_SLACK

    y = np.arange(0.0, tab.stages + 1.0, Y_GRID)
    good = ok(y)
    if good.all():
        return float(y[-1])
    k = int(np.argmin(good))
    if k == 0:
        return 0.0
    lo, hi = y[k - 1], y[k]
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return float(lo)


def stage_order(tab: ButcherTableau, max_order: int = 10) -> int:
    A, c = tab.A, tab.c
    q = 0
    for k in range(1, max_order + 1):
        if np.max(np.abs(A @ c ** (k - 1) - c ** k / k)) > ORDER_TOL:
            break
        q = k
    return q


# --- certification ---------------------------------------------------------------------

@dataclass
class MethodPropertyReport:
    name: str
    implicit_solves: int
    explicit_evals: int
    order_explicit: int
    order_implicit: int
    order_coupled: int
    stage_order_explicit: int
    stage_order_implicit: int
    stage_order_coupled: int
    a_stable: bool
    l_stable: bool
    algebraically_stable: bool
    stiffly_accurate_dirk: bool
    stiffly_accurate_erk: bool
    shared_b: bool
    shared_c: bool
    max_imag_step: float
    order_source: str = "algebraic"
    empirical_betas: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _empirical_orders(method: ARKMethod) -> dict:
    from .models import SplitOscillator
    cases = {"explicit": SplitOscillator(1.0, 0.0), "implicit": SplitOscillator(0.0, 1.0),
             "coupled": SplitOscillator(1.0, 10.0)}
    return {k: empirical_order(method, p) for k, p in cases.items()}


def certify(method: ARKMethod, empirical: bool = True) -> MethodPropertyReport:
    """Compute every Table-A1 style property of ``method``.

    Orders come from the algebraic conditions (capped at 3). When the method
    declares order > 3 and passes all order-3 conditions, the orders are taken
    from measured convergence rates (rounded) instead.
    """
    ex = method.explicit
    im = method.explicit if method.is_pure_explicit else method.implicit
    oE, oI, oA = algebraic_orders(method)
    betas = {}
    source = "algebraic"
    if empirical and method.declared_order > 3 and min(oE, oI, oA) == 3:
        betas = _empirical_orders(method)
        oE = max(3, round(betas["explicit"]))
        oI = max(3, round(betas["implicit"]))
        oA = min(max(3, round(betas["coupled"])), oE, oI)
        source = "empirical"
    soE, soI = stage_order(ex), stage_order(im)
    shared_c = bool(np.max(np.abs(ex.c - im.c)) <= SA_TOL)
    pure = method.is_pure_explicit
    a_st = False if pure else check_a_stability(im)
    return MethodPropertyReport(
        name=method.name,
        implicit_solves=method.declared_implicit_solves,
        explicit_evals=method.declared_explicit_evals,
        order_explicit=oE, order_implicit=oI, order_coupled=min(oA, oE, oI),
        stage_order_explicit=soE, stage_order_implicit=soI,
        stage_order_coupled=min(soE, soI) if shared_c else 0,
        a_stable=a_st,
        l_stable=a_st and stability_at_infinity(im) <= 1e-12,
        algebraically_stable=False if pure else check_algebraic_stability(im),
        stiffly_accurate_dirk=(not pure) and _stiffly_accurate(im),
        stiffly_accurate_erk=_stiffly_accurate(ex),
        shared_b=bool(np.array_equal(ex.b, im.b)),
        shared_c=shared_c,
        max_imag_step=max_imag_stable_step(ex),
        order_source=source,
        empirical_betas=betas,
    )


def _stiffly_accurate(tab: ButcherTableau) -> bool:
    return bool(np.max(np.abs(tab.A[-1] - tab.b)) <= SA_TOL)


@dataclass
class Mismatch:
    field: str
    expected: object
    computed: object


def compare_with_expected(report: MethodPropertyReport, expected: dict,
                          max_exp_tol: float = 0.05) -> tuple[list[Mismatch], str]:
    """Mismatches against a Table-A1 style record, plus the B-column verdict.

    The verdict is "yes", "no" or "indeterminate": failing the algebraic
    test is only sufficient evidence against B-stability when the reference
    also says no.
    """
    mism = []

    def chk(name, exp, got):
        if exp != got:
            mism.append(Mismatch(name, exp, got))

    chk("implicit_solves", expected["implicit_solves"], report.implicit_solves)
    chk("explicit_evals", expected["explicit_evals"], report.explicit_evals)
    for part in ("explicit", "implicit", "coupled"):
        chk(f"order_{part}", expected["order"][part], getattr(report, f"order_{part}"))
        chk(f"stage_order_{part}", expected["stage_order"][part],
            getattr(report, f"stage_order_{part}"))
    for flag in ("a_stable", "l_stable", "stiffly_accurate_dirk", "stiffly_accurate_erk",
                 "shared_b", "shared_c"):
        chk(flag, expected[flag], getattr(report, flag))
    if report.algebraically_stable:
        verdict = "yes"
        chk("b_stable", expected["b_stable"], True)
    else:
        verdict = "indeterminate" if expected["b_stable"] else "no"
    if abs(report.max_imag_step - expected["max_imag_step"]) > max_exp_tol:
        mism.append(Mismatch("max_imag_step", expected["max_imag_step"], report.max_imag_step))
    return mism, verdict


# --- stability boundary ------------------------------------------------------------------

@dataclass
class StabilityBoundary:
    resolution: int
    angles: np.ndarray                 # (resolution,)
    roots: np.ndarray                  # (resolution, degree), branch-tracked
    failures: list[float]              # angles where a root could not be polished
    implicit_y: np.ndarray
    implicit_modulus: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.roots.ravel()

    def imaginary_axis_crossings(self) -> np.ndarray:
        """Positive imaginary parts where a branch crosses Re z = 0."""
        out = []
        first = self.roots[0]
        if self.roots.shape[1] > 1:
            # close each branch across theta = 2 pi -> 0
            _, cols = linear_sum_assignment(np.abs(self.roots[-1][:, None] - first[None, :]))
            first = first[cols]
        R = np.vstack([self.roots, first])
        for b in range(R.shape[1]):
            re, im = R[:, b].real, R[:, b].imag
            for k in range(len(re) - 1):
                if re[k] == 0.0 or re[k] * re[k + 1] < 0:
                    w = re[k] / (re[k] - re[k + 1]) if re[k] != re[k + 1] else 0.0
                    y = im[k] + w * (im[k + 1] - im[k])
                    if y > 1e-6:
                        out.append(y)
        return np.unique(np.round(out, 6))


def stability_boundary(method: ARKMethod, resolution: int = 1440,
                       y_samples: int = 400) -> StabilityBoundary:
    """Sample {z : |P(z)| = 1} by solving P(z) = exp(i theta) for each angle."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    ex = method.explicit
    p = stability_polynomial(ex)
    deg = len(p) - 1
    thetas = 2 * np.pi * np.arange(resolution) / resolution
    roots = np.zeros((resolution, deg), dtype=complex)
    failures = []
    prev = None
    for k, th in enumerate(thetas):
        c = p.astype(complex).copy()
        c[0] -= np.exp(1j * th)
        r = np.roots(c[::-1]) if deg > 0 else np.zeros(0, dtype=complex)
        r = np.array([_polish(p, z, th) for z in r])
        if np.any(np.abs(np.abs(npoly.polyval(r, p)) - 1.0) > 1e-9):
            failures.append(float(th))
        if prev is not None and deg > 1:
            cost = np.abs(prev[:, None] - r[None, :])
            _, cols = linear_sum_assignment(cost)
            r = r[cols]
        roots[k] = r
        prev = r
    im = method.explicit if method.is_pure_explicit else method.implicit
    y = np.geomspace(1e-3, 1e3, y_samples)
    mod = np.abs(stability_values(im, 1j * y))
    return StabilityBoundary(resolution, thetas, roots, failures, y, mod)


def _polish(p, z, theta, iters=3):
    dp = npoly.polyder(p)
    target = np.exp(1j * theta)
    for _ in range(iters):
        d = npoly.polyval(z, dp)
        if d == 0:
            break
        z = z - (npoly.polyval(z, p) - target) / d
    return z


def rational_boundary(tab: ButcherTableau, resolution: int = 1440) -> np.ndarray:
    """Points of {z : |R(z)| = 1} for a DIRK tableau: roots of N(z) - e^{i theta} D(z)."""
    num, den = rational_form(tab)
    n = max(len(num), len(den))
    num = np.pad(num, (0, n - len(num))).astype(complex)
    den = np.pad(den, (0, n - len(den))).astype(complex)
    out = []
    for th in 2 * np.pi * np.arange(resolution) / resolution:
        c = _trim(num - np.exp(1j * th) * den)
        if len(c) > 1:
            out.extend(np.roots(c[::-1]))
    return np.array(out, dtype=complex)
