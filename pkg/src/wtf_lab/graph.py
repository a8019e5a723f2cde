"""Evaluation of the Weierstrass-type series and its oscillation geometry.

W_theta(x) = sum_n lambda(x) lambda(tau x) ... lambda(tau^{n-1} x) * g(tau^n x + theta_n),
truncated where the geometric tail bound
(sup lambda)^N * sup|g| / (1 - sup lambda) drops below the requested
tolerance.  Orbits continue through gaps via tau(gap) = 0, so the series is
defined on the whole circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import CookieCutterSystem, SymbolWord, code_of
from .errors import Inconclusive, InvalidTolerance
from .theta import ThetaSequence


@dataclass(frozen=True)
class EvalResult:
    value: float
    terms_used: int
    tail_bound: float


def _terms_for_tolerance(sys: CookieCutterSystem, tol: float) -> tuple[int, float]:
    if tol <= 0:
        raise InvalidTolerance("tolerance must be positive")
    g_sup = sys.g.sup_bound
    lam_sup = sys.lambda_sup
    if g_sup == 0.0:
        return 1, 0.0
    # smallest N with g_sup * lam_sup^N / (1 - lam_sup) <= tol
    n = max(1, math.ceil(math.log(tol * (1.0 - lam_sup) / g_sup) / math.log(lam_sup)))
    while g_sup * lam_sup**n / (1.0 - lam_sup) > tol:
        n += 1
    while n > 1 and g_sup * lam_sup**(n - 1) / (1.0 - lam_sup) <= tol:
        n -= 1
    return n, g_sup * lam_sup**n / (1.0 - lam_sup)


def eval_W_many(sys: CookieCutterSystem, xs: np.ndarray, theta: ThetaSequence,
                tol: float = 1e-10) -> tuple[np.ndarray, int, float]:
    """Vectorized series evaluation; one truncation index for the whole batch."""
    n_terms, tail = _terms_for_tolerance(sys, tol)
    xs = np.asarray(xs, dtype=float)
    shifts = theta.block(0, n_terms)
    acc = np.zeros_like(xs)
    weight = np.ones_like(xs)
    cur = xs.copy()
    for n in range(n_terms):
        acc += weight * sys.g_at(cur + shifts[n])
        if n + 1 < n_terms:
            weight *= sys.lam_at(cur)
            cur = sys.tau(cur)
    return acc, n_terms, tail


def eval_W(sys: CookieCutterSystem, x: float, theta: ThetaSequence,
           tol: float = 1e-10) -> EvalResult:
    values, n_terms, tail = eval_W_many(sys, np.array([float(x)]), theta, tol)
    return EvalResult(float(values[0]), n_terms, tail)


def eval_W_skew(sys: CookieCutterSystem, x: float, theta: ThetaSequence,
                n: int, tol: float = 1e-10) -> float:
    """Evaluate W_theta(x) through the skew product: compute the deep value
    W_{sigma^n theta}(tau^n x), then pull it back by the n plane contractions
    F_{theta_k, i_k}(u, y) = (rho_i(u), lambda(rho_i(u)) y + g(rho_i(u)+theta_k)),
    applied for k = n-1 down to 0.  Exactly eval_W at n = 0."""
    if n == 0:
        return eval_W(sys, x, theta, tol).value
    word = code_of(sys, x, n)
    u = float(x)
    for _ in range(n):
        u = float(sys.tau(np.array([u]))[0])
    y = eval_W(sys, u, theta.shift(n), tol).value
    for k in range(n - 1, -1, -1):
        i = word[k]
        u = float(sys.branches[i].inverse(u))
        y = float(sys.lam_at(np.array([u]))[0]) * y + float(sys.g_at(np.array([u + theta[k]]))[0])
    return y


@dataclass(frozen=True)
class Oscillation:
    word: SymbolWord
    osc: float
    probes: int


def _stratified_probe_points(sys: CookieCutterSystem, word: SymbolWord, probes: int) -> np.ndarray:
    """Representatives of the depth-m refinements of the word's cylinder,
    m chosen so the probe count is met; mirrors a Moran cover of J cap I_n."""
    m = max(1, math.ceil(math.log(max(probes, 2)) / math.log(sys.ell)))
    ts = sys.representatives(m, 0.5)
    x = ts
    for d in word.as_array()[::-1]:
        x = sys.branches[d].inverse(x)
    return x


def oscillation_over(sys: CookieCutterSystem, word, theta: ThetaSequence,
                     probes: int = 128, tol: float = 1e-10, _curve=None) -> Oscillation:
    """sup - inf of W over stratified sub-cylinder representatives of the word.

    ``_curve`` swaps in an alternative height function (testing hook for
    synthetic smooth curves)."""
    if probes < 2:
        raise ValueError("probes must be >= 2")
    word = SymbolWord(word)
    pts = _stratified_probe_points(sys, word, probes)
    if _curve is None:
        ys, _, _ = eval_W_many(sys, pts, theta, tol)
    else:
        ys = np.asarray(_curve(pts), dtype=float)
    return Oscillation(word, float(ys.max() - ys.min()), len(pts))


@dataclass(frozen=True)
class DegeneracyVerdict:
    degenerate: bool
    c_hat: float | None
    ratios: tuple[float, ...]
    lipschitz: tuple[float, ...]

    @property
    def label(self) -> str:
        return "degenerate" if self.degenerate else "non_degenerate"


def detect_degenerate(sys: CookieCutterSystem, theta: ThetaSequence,
                      depth_range=range(2, 13), probes: int = 128,
                      tol: float = 1e-12, words_per_depth: int = 8,
                      seed: int = 2024) -> DegeneracyVerdict:
    """Finite-range Lipschitz test.

    Tracks r_n = max_w osc/lambda^n and the Lipschitz ratio max_w osc/|I_n|
    over sampled depth-n cylinders.  Degenerate verdict: r_n decays
    exponentially while the Lipschitz ratio stays flat; non-degenerate:
    r_n stays bounded away from 0.  Mixed signals raise Inconclusive.
    """
    depths = sorted(depth_range)
    if not depths:
        raise ValueError("depth_range must be nonempty")
    from .dynamics import enumerate_words, cylinder_bounds_many
    rng = np.random.default_rng(seed)
    ratios, lips = [], []
    for n in depths:
        if sys.ell**n <= 2 * words_per_depth:
            words = enumerate_words(sys.ell, n)
        else:
            words = rng.integers(0, sys.ell, size=(words_per_depth, n)).astype(np.uint8)
        lo, hi = cylinder_bounds_many(sys, words)
        r_best, lip_best = 0.0, 0.0
        for j in range(words.shape[0]):
            w = SymbolWord(words[j])
            osc = oscillation_over(sys, w, theta, probes=probes, tol=tol).osc
            lam_n = math.exp(_log_lambda_word(sys, words[j], lo[j], hi[j]))
            r_best = max(r_best, osc / lam_n)
            lip_best = max(lip_best, osc / (hi[j] - lo[j]))
        ratios.append(r_best)
        lips.append(lip_best)

    r = np.array(ratios)
    lip = np.array(lips)
    if np.all(r < 10.0 * tol):
        return DegeneracyVerdict(True, None, tuple(ratios), tuple(lips))

    ns = np.array(depths, dtype=float)
    slope_r = _log_slope(ns, r)
    slope_lip = _log_slope(ns, lip)
    decays = slope_r <= -0.2 and r[-1] < 0.2 * r[0]
    flat_r = slope_r > -0.05
    flat_lip = abs(slope_lip) <= 0.1
    if decays and flat_lip:
        return DegeneracyVerdict(True, None, tuple(ratios), tuple(lips))
    if flat_r and r.min() > 0.0:
        return DegeneracyVerdict(False, float(r.min()), tuple(ratios), tuple(lips))
    raise Inconclusive(
        f"oscillation diagnostics disagree over depths {depths[0]}..{depths[-1]}: "
        f"slope(osc/lambda^n)={slope_r:.3f}, slope(osc/|I_n|)={slope_lip:.3f}")


def _log_slope(ns: np.ndarray, values: np.ndarray) -> float:
    mask = values > 0
    if mask.sum() < 2:
        return 0.0
    x = ns[mask]
    y = np.log(values[mask])
    x = x - x.mean()
    return float((x * (y - y.mean())).sum() / (x * x).sum())


def _log_lambda_word(sys: CookieCutterSystem, digits: np.ndarray, lo: float, hi: float) -> float:
    """S_n log lambda at the cylinder's representative."""
    if sys.is_affine and sys.lam.branch_constant:
        from .dynamics import birkhoff_sums_from_digits
        _, v = birkhoff_sums_from_digits(sys, digits[None, :])
        return float(v[0])
    total = 0.0
    cur = 0.5 * (lo + hi)
    for _ in range(len(digits)):
        total += float(sys.log_lam(np.array([cur]))[0])
        cur = float(sys.tau(np.array([cur]))[0])
    return total
