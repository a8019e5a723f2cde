"""Cookie-cutter systems: branches, symbolic coding, cylinders, Birkhoff sums.

A cookie cutter is an expanding map of the circle [0,1) defined branchwise on
disjoint closed subintervals, each branch a monotone diffeomorphism onto
(0,1); points outside the branch union map to 0.  The invariant repeller is
coded by the full shift on ell symbols, and all downstream computations
(pressure sums, graph sampling, oscillation probes) work through the
depth-n cylinder structure built here.

Numeric conventions:
  * branch geometry (cylinders, inverse images) uses the closed domains;
  * digit assignment kappa(x) uses left-closed/right-open membership
    [a_i, b_i), so orbits through shared branch endpoints are coded the way
    the forward map actually moves them; points that no half-open domain
    covers (gaps, preimages of {0,1}) raise NotInPartition;
  * the torus metric is d(x,u) = min(|x-u|, 1-|x-u|).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    BadConfig,
    BudgetExceeded,
    HyperbolicityViolated,
    InversionFailed,
    LambdaOutOfRange,
    NotInPartition,
    NotOnto,
    OverlappingBranches,
)
from .theta import counter_uniforms

DEFAULT_BUDGET = 2**24
_ONTO_TOL = 1e-9
_INVERT_TOL = 1e-12
_PROBES_PER_BRANCH = 10_001


def cylinder_budget() -> int:
    """Word-count budget; WTF_LAB_BUDGET overrides the 2**24 default."""
    raw = os.environ.get("WTF_LAB_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise BadConfig(f"WTF_LAB_BUDGET must be an integer, got {raw!r}") from exc
    if value < 2:
        raise BadConfig("WTF_LAB_BUDGET must be >= 2")
    return value


def torus_distance(x, u, convention: str = "min"):
    """Circle metric min(|x-u|, 1-|x-u|).

    convention="max" keeps the other reading of the wrap-around distance
    available for sensitivity checks; it is not a metric bounded by 1/2 and
    nothing in the lab depends on it.
    """
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(u, dtype=float))
    if convention == "min":
        return np.minimum(d, 1.0 - d)
    if convention == "max":
        return np.maximum(d, 1.0 - d)
    raise ValueError(f"unknown torus metric convention {convention!r}")


# ---------------------------------------------------------------------------
# trig polynomials (used for g and for analytic lambda)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrigPoly:
    """c0 + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x); 1-periodic."""

    c0: float = 0.0
    harmonics: tuple[tuple[int, float, float], ...] = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, self.c0)
        for k, a, b in self.harmonics:
            w = 2.0 * math.pi * k * x
            if a:
                out = out + a * np.cos(w)
            if b:
                out = out + b * np.sin(w)
        return out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for k, a, b in self.harmonics:
            w = 2.0 * math.pi * k * x
            c = 2.0 * math.pi * k
            if a:
                out = out - a * c * np.sin(w)
            if b:
                out = out + b * c * np.cos(w)
        return out

    @property
    def sup_bound(self) -> float:
        return abs(self.c0) + sum(abs(a) + abs(b) for _, a, b in self.harmonics)

    @property
    def is_zero(self) -> bool:
        return self.c0 == 0.0 and all(a == 0.0 and b == 0.0 for _, a, b in self.harmonics)

    def describe(self) -> dict:
        return {"kind": "trig", "c0": self.c0, "harmonics": [list(h) for h in self.harmonics]}


COS_2PI = TrigPoly(0.0, ((1, 1.0, 0.0),))


# ---------------------------------------------------------------------------
# branches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineBranch:
    """tau(x) = slope*x + offset on [lo, hi], image [0,1]."""

    index: int
    lo: float
    hi: float
    slope: float
    offset: float

    kind = "affine"

    @property
    def orientation(self) -> int:
        return 1 if self.slope > 0 else -1

    def forward(self, x):
        return self.slope * np.asarray(x, dtype=float) + self.offset

    def derivative(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.slope)

    def inverse(self, y):
        x = (np.asarray(y, dtype=float) - self.offset) / self.slope
        return np.clip(x, self.lo, self.hi)

    def describe(self) -> dict:
        return {"kind": "affine", "domain": [self.lo, self.hi],
                "slope": self.slope, "offset": self.offset}


@dataclass(frozen=True)
class SineFamilyBranch:
    """Branch k of x -> ell*x + eps*sin(2 pi x) mod 1 (requires 2 pi eps < ell)."""

    index: int
    lo: float
    hi: float
    ell: int
    eps: float

    kind = "doubling_plus_sine"

    @property
    def orientation(self) -> int:
        return 1

    def _f(self, x):
        x = np.asarray(x, dtype=float)
        return self.ell * x + self.eps * np.sin(2.0 * math.pi * x)

    def forward(self, x):
        return self._f(x) - float(self.index)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return self.ell + 2.0 * math.pi * self.eps * np.cos(2.0 * math.pi * x)

    def inverse(self, y):
        target = np.asarray(y, dtype=float) + float(self.index)
        x = _invert_increasing(self._f, self.derivative, target, self.lo, self.hi)
        return np.clip(x, self.lo, self.hi)

    def describe(self) -> dict:
        return {"kind": "doubling_plus_sine", "domain": [self.lo, self.hi],
                "ell": self.ell, "eps": self.eps}


def _invert_increasing(f, fprime, target, lo, hi, tol=_INVERT_TOL, max_iter=200):
    """Solve f(x) = target on [lo, hi] for increasing f: safeguarded Newton
    with a bisection bracket, absolute tolerance ``tol`` on x."""
    target = np.asarray(target, dtype=float)
    scalar = target.ndim == 0
    t = np.atleast_1d(target)
    a = np.full_like(t, lo)
    b = np.full_like(t, hi)
    x = 0.5 * (a + b)
    for _ in range(max_iter):
        fx = f(x) - t
        below = fx <= 0
        a = np.where(below, x, a)
        b = np.where(below, b, x)
        d = fprime(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - fx / d
        bad = ~np.isfinite(xn) | (xn <= a) | (xn >= b)
        xn = np.where(bad, 0.5 * (a + b), xn)
        if np.max(np.abs(xn - x)) < tol and np.max(b - a) < 4.0 * tol:
            x = xn
            break
        x = xn
    else:
        raise InversionFailed(
            f"inverse branch root-finding did not reach {tol:g} on [{lo}, {hi}]")
    return float(x[0]) if scalar else x


# ---------------------------------------------------------------------------
# lambda specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LambdaSpec:
    """Contraction weight lambda with values in (0,1).

    kinds: "constant" (value), "branch_constant" (one value per branch),
    "trig" (TrigPoly).  Branch-constant evaluation at gap points takes the
    value of the nearest branch (lower index on ties); only off-repeller
    visualisation ever touches that case.
    """

    kind: str
    value: float = 0.0
    values: tuple[float, ...] = ()
    poly: TrigPoly | None = None

    @property
    def branch_constant(self) -> bool:
        return self.kind in ("constant", "branch_constant")

    def branch_values(self, n_branches: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(n_branches, self.value)
        if self.kind == "branch_constant":
            return np.asarray(self.values, dtype=float)
        raise NotImplementedError("analytic lambda has no branch values")

    def describe(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "branch_constant":
            return {"kind": "branch_constant", "values": list(self.values)}
        return self.poly.describe()


# ---------------------------------------------------------------------------
# symbolic words and cylinders
# ---------------------------------------------------------------------------

class SymbolWord:
    """Immutable finite digit string over {0..ell-1}, one digit per byte."""

    __slots__ = ("_data",)

    def __init__(self, digits):
        if isinstance(digits, SymbolWord):
            data = digits._data
        elif isinstance(digits, (bytes, bytearray)):
            data = bytes(digits)
        elif isinstance(digits, np.ndarray):
            data = digits.astype(np.uint8).tobytes()
        else:
            data = bytes(int(d) for d in digits)
        if len(data) == 0:
            raise ValueError("a symbol word needs at least one digit")
        object.__setattr__(self, "_data", data)

    @property
    def digits(self) -> tuple[int, ...]:
        return tuple(self._data)

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self._data, dtype=np.uint8)

    def __len__(self) -> int:
        return len(self._data)

    def __iter__(self):
        return iter(self._data)

    def __getitem__(self, i):
        return self._data[i]

    def __eq__(self, other):
        return isinstance(other, SymbolWord) and self._data == other._data

    def __hash__(self):
        return hash(self._data)

    def __repr__(self):
        if len(self._data) <= 24:
            return f"SymbolWord({''.join(str(d) for d in self._data)})"
        head = "".join(str(d) for d in self._data[:16])
        return f"SymbolWord({head}...len={len(self._data)})"

    def __setattr__(self, *args):
        raise AttributeError("SymbolWord is immutable")


@dataclass(frozen=True)
class Cylinder:
    """Closed interval of points whose first len(word) digits match word."""

    word: SymbolWord
    lo: float
    hi: float

    @property
    def interval(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, slack: float = 1e-12) -> bool:
        return self.lo - slack <= x <= self.hi + slack


# ---------------------------------------------------------------------------
# the system
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CookieCutterSystem:
    """Validated cookie cutter (tau, lambda, g). Immutable after construction;
    all operations are pure functions of (system, inputs)."""

    model_id: str
    branches: tuple
    lam: LambdaSpec
    g: TrigPoly
    hyperbolicity_margin: float
    margin_slack: float
    lambda_inf: float
    lambda_sup: float
    warnings: tuple[str, ...] = ()
    _tree_cache: dict = field(default_factory=dict, repr=False)

    @property
    def ell(self) -> int:
        return len(self.branches)

    @property
    def is_affine(self) -> bool:
        return all(b.kind == "affine" for b in self.branches)

    @property
    def is_full(self) -> bool:
        """True when the branch domains tile [0,1] (repeller = whole circle)."""
        lows = self.branch_lows
        highs = self.branch_highs
        inner = np.all(np.abs(highs[:-1] - lows[1:]) < 1e-12)
        return bool(inner and lows[0] < 1e-12 and highs[-1] > 1.0 - 1e-12)

    @cached_property
    def branch_lows(self) -> np.ndarray:
        return np.array([b.lo for b in self.branches])

    @cached_property
    def branch_highs(self) -> np.ndarray:
        return np.array([b.hi for b in self.branches])

    @cached_property
    def contraction_ratios(self) -> np.ndarray:
        """|I_i| per branch = 1/|tau'| for affine branches."""
        return self.branch_highs - self.branch_lows

    # -- pointwise fields ---------------------------------------------------

    def branch_index(self, x):
        """kappa(x) with half-open membership; -1 marks points outside
        every [a_i, b_i)."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.branch_lows, x, side="right") - 1
        idx = np.clip(idx, 0, self.ell - 1)
        inside = (x >= self.branch_lows[idx]) & (x < self.branch_highs[idx])
        return np.where(inside, idx, -1)

    def nearest_branch(self, x):
        """Branch index for lambda evaluation off the branch union
        (ties go to the lower index)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = self.branch_index(x)
        gap = idx < 0
        if np.any(gap):
            xg = x[gap]
            prev = np.clip(np.searchsorted(self.branch_lows, xg, side="right") - 1, 0, self.ell - 1)
            nxt = np.clip(prev + 1, 0, self.ell - 1)
            d_prev = np.abs(xg - self.branch_highs[prev])
            d_next = np.abs(self.branch_lows[nxt] - xg)
            pick = np.where(d_next < d_prev, nxt, prev)
            idx = idx.copy()
            idx[gap] = pick
        return idx

    def tau(self, x):
        """Forward map; gap points go to 0, endpoint images wrap mod 1."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        idx = self.branch_index(x)
        for i, br in enumerate(self.branches):
            m = idx == i
            if np.any(m):
                out[m] = br.forward(x[m])
        out = np.mod(out, 1.0)
        return out

    def tau_prime(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, np.nan)
        idx = self.nearest_branch(x)
        for i, br in enumerate(self.branches):
            m = idx == i
            if np.any(m):
                out[m] = br.derivative(x[m])
        return out

    def log_abs_tau_prime(self, x):
        return np.log(np.abs(self.tau_prime(x)))

    def lam_at(self, x):
        x = np.asarray(x, dtype=float)
        if self.lam.kind == "constant":
            return np.full_like(x, self.lam.value)
        if self.lam.kind == "branch_constant":
            vals = np.asarray(self.lam.values)
            return vals[self.nearest_branch(x)]
        return self.lam.poly(x)

    def log_lam(self, x):
        return np.log(self.lam_at(x))

    def g_at(self, u):
        return self.g(u)

    def inverse(self, i: int, y):
        """i-th inverse branch rho_i: [0,1] -> closure(I_i)."""
        return self.branches[i].inverse(y)

    # -- cylinder tree -------------------------------------------------------

    def tree(self, depth: int, budget: int | None = None):
        """Midpoint representatives and Birkhoff sums for every depth-k word,
        k <= depth.  Returns dict level -> (X, U, V) with X the representative
        rho_w(1/2), U = S_k log|tau'|, V = S_k log lambda, words in
        lexicographic order (first digit most significant)."""
        budget = cylinder_budget() if budget is None else budget
        if self.ell**depth > budget:
            raise BudgetExceeded(
                f"{self.ell}^{depth} cylinders exceed the budget {budget}")
        levels = self._tree_cache
        if depth in levels:
            return levels
        start = max((k for k in levels if k < depth), default=0)
        if start == 0 and 0 not in levels:
            x0 = np.array([0.5])
            levels[0] = (x0, np.zeros(1), np.zeros(1))
        for k in range(start + 1, depth + 1):
            xp, up, vp = levels[k - 1]
            xs, us, vs = [], [], []
            for i in range(self.ell):
                xi = self.branches[i].inverse(xp)
                xs.append(xi)
                us.append(np.log(np.abs(self.branches[i].derivative(xi))) + up)
                vs.append(self.log_lam(xi) + vp)
            levels[k] = (np.concatenate(xs), np.concatenate(us), np.concatenate(vs))
        return levels

    def representatives(self, depth: int, t, budget: int | None = None) -> np.ndarray:
        """rho_w(t) over all depth-n words w (lexicographic order)."""
        budget = cylinder_budget() if budget is None else budget
        if self.ell**depth > budget:
            raise BudgetExceeded(
                f"{self.ell}^{depth} cylinders exceed the budget {budget}")
        x = np.array([float(t)])
        for _ in range(depth):
            x = np.concatenate([self.branches[i].inverse(x) for i in range(self.ell)])
        return x

    def describe(self) -> dict:
        return {
            "id": self.model_id,
            "branches": [b.describe() for b in self.branches],
            "lambda": self.lam.describe(),
            "g": self.g.describe(),
        }


# ---------------------------------------------------------------------------
# construction / validation
# ---------------------------------------------------------------------------

def _parse_g(spec) -> TrigPoly:
    if spec is None:
        return COS_2PI
    if isinstance(spec, TrigPoly):
        return spec
    kind = spec.get("kind", "trig")
    if kind == "zero":
        return TrigPoly(0.0, ())
    if kind == "trig":
        harmonics = tuple((int(k), float(a), float(b)) for k, a, b in spec.get("harmonics", []))
        return TrigPoly(float(spec.get("c0", 0.0)), harmonics)
    raise BadConfig(f"unknown g kind {kind!r}")


def _parse_lambda(spec) -> LambdaSpec:
    if isinstance(spec, LambdaSpec):
        return spec
    if isinstance(spec, (int, float)):
        return LambdaSpec("constant", value=float(spec))
    kind = spec.get("kind")
    if kind == "constant":
        return LambdaSpec("constant", value=float(spec["value"]))
    if kind == "branch_constant":
        return LambdaSpec("branch_constant", values=tuple(float(v) for v in spec["values"]))
    if kind == "trig":
        return LambdaSpec("trig", poly=_parse_g(spec))
    raise BadConfig(f"unknown lambda kind {kind!r}")


def _build_branches(spec) -> tuple:
    if isinstance(spec, dict) and "family" in spec:
        family = spec["family"]
        if family == "ell_adic":
            ell = int(spec["ell"])
            if ell < 2:
                raise BadConfig("ell_adic family needs ell >= 2")
            return tuple(
                AffineBranch(i, i / ell, (i + 1) / ell, float(ell), -float(i))
                for i in range(ell)
            )
        if family == "doubling_plus_sine":
            ell = int(spec["ell"])
            eps = float(spec.get("eps", 0.0))
            if ell < 2:
                raise BadConfig("doubling_plus_sine needs ell >= 2")
            if 2.0 * math.pi * abs(eps) >= ell:
                raise BadConfig("doubling_plus_sine needs 2*pi*|eps| < ell for monotonicity")

            def f(x):
                return ell * np.asarray(x, dtype=float) + eps * np.sin(2.0 * math.pi * np.asarray(x, dtype=float))

            def fp(x):
                return ell + 2.0 * math.pi * eps * np.cos(2.0 * math.pi * np.asarray(x, dtype=float))

            cuts = [0.0]
            for k in range(1, ell):
                cuts.append(_invert_increasing(f, fp, float(k), 0.0, 1.0))
            cuts.append(1.0)
            return tuple(
                SineFamilyBranch(i, cuts[i], cuts[i + 1], ell, eps) for i in range(ell)
            )
        raise BadConfig(f"unknown branch family {family!r}")

    branches = []
    for i, b in enumerate(spec):
        if b.get("kind", "affine") != "affine":
            raise BadConfig("explicit branch lists support affine branches only")
        lo, hi = (float(v) for v in b["domain"])
        if not (0.0 <= lo < hi <= 1.0):
            raise BadConfig(f"branch {i} domain [{lo}, {hi}] not inside [0,1]")
        if "slope" in b:
            slope = float(b["slope"])
            offset = float(b["offset"]) if "offset" in b else (
                -slope * lo if slope > 0 else -slope * hi)
        else:
            slope = 1.0 / (hi - lo)
            offset = -slope * lo
        branches.append(AffineBranch(i, lo, hi, slope, offset))
    return tuple(branches)


def validate_system(spec: dict, probes_per_branch: int = _PROBES_PER_BRANCH) -> CookieCutterSystem:
    """Validate a raw model description and compute the hyperbolicity margin.

    The margin is the probe-grid minimum of |tau'(x)| * lambda(x) minus a
    slack equal to the largest jump between adjacent probes; it must exceed 1.
    """
    if not isinstance(spec, dict):
        raise BadConfig("model spec must be a mapping")
    model_id = str(spec.get("id", "anonymous"))
    branches = _build_branches(spec.get("branches"))
    if len(branches) < 2:
        raise BadConfig("need at least 2 branches")
    lam = _parse_lambda(spec.get("lambda"))
    g = _parse_g(spec.get("g"))

    if lam.kind == "branch_constant" and len(lam.values) != len(branches):
        raise BadConfig("branch_constant lambda needs one value per branch")

    order = sorted(range(len(branches)), key=lambda i: branches[i].lo)
    branches = tuple(branches[order[i]] for i in range(len(branches)))
    if any(br.index != i for i, br in enumerate(branches)):
        # re-index after sorting so digit i always means the i-th interval
        branches = tuple(
            type(br)(**{**_branch_fields(br), "index": i}) for i, br in enumerate(branches)
        )

    for left, right in zip(branches, branches[1:]):
        if right.lo < left.hi - 1e-15:
            raise OverlappingBranches(
                f"branches [{left.lo}, {left.hi}] and [{right.lo}, {right.hi}] overlap")

    warnings = []
    margin = math.inf
    slack = 0.0
    lam_inf, lam_sup = math.inf, -math.inf
    orientations = set()
    for br in branches:
        grid = np.linspace(br.lo, br.hi, probes_per_branch)
        image = br.forward(grid)
        d = br.derivative(grid)
        if np.any(np.abs(d) < 1e-12) or not np.all(np.isfinite(d)):
            raise BadConfig(f"branch {br.index}: derivative not bounded away from 0")
        if np.any(np.sign(d) != np.sign(d[0])):
            raise BadConfig(f"branch {br.index}: forward map not monotone")
        ends = sorted((image[0], image[-1]))
        if abs(ends[0]) > _ONTO_TOL or abs(ends[1] - 1.0) > _ONTO_TOL:
            raise NotOnto(
                f"branch {br.index} image [{ends[0]:.3g}, {ends[1]:.3g}] != (0,1)")
        orientations.add(br.orientation)

        if lam.kind == "constant":
            lam_vals = np.full_like(grid, lam.value)
        elif lam.kind == "branch_constant":
            lam_vals = np.full_like(grid, lam.values[br.index])
        else:
            lam_vals = lam.poly(grid)
        if np.any(lam_vals <= 0.0) or np.any(lam_vals >= 1.0):
            raise LambdaOutOfRange(
                f"lambda leaves (0,1) on branch {br.index}")
        lam_inf = min(lam_inf, float(lam_vals.min()))
        lam_sup = max(lam_sup, float(lam_vals.max()))

        product = np.abs(d) * lam_vals
        margin = min(margin, float(product.min()))
        if len(product) > 1:
            slack = max(slack, float(np.max(np.abs(np.diff(product)))))

    if len(orientations) > 1:
        warnings.append("mixed branch orientations: expansivity may fail on V-shaped configurations")

    margin_est = margin - slack
    if margin_est <= 1.0:
        raise HyperbolicityViolated(
            f"inf |tau'| * lambda = {margin:.6g} (slack {slack:.2g}) does not exceed 1")

    return CookieCutterSystem(
        model_id=model_id,
        branches=branches,
        lam=lam,
        g=g,
        hyperbolicity_margin=margin_est,
        margin_slack=slack,
        lambda_inf=lam_inf,
        lambda_sup=lam_sup,
        warnings=tuple(warnings),
    )


def _branch_fields(br) -> dict:
    if br.kind == "affine":
        return {"index": br.index, "lo": br.lo, "hi": br.hi,
                "slope": br.slope, "offset": br.offset}
    return {"index": br.index, "lo": br.lo, "hi": br.hi, "ell": br.ell, "eps": br.eps}


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def apply_tau(sys: CookieCutterSystem, x: float) -> float:
    """Forward map at a single torus point (gaps go to 0)."""
    if not 0.0 <= x < 1.0:
        raise ValueError("x must lie in [0,1)")
    return float(sys.tau(np.array([x]))[0])


def code_of(sys: CookieCutterSystem, x: float, n: int) -> SymbolWord:
    """First n digits of x's itinerary; NotInPartition(k) if iterate k
    falls in a gap or on an endpoint no half-open domain covers."""
    if n < 1:
        raise ValueError("depth must be >= 1")
    digits = np.empty(n, dtype=np.uint8)
    cur = float(x)
    for k in range(n):
        idx = int(sys.branch_index(np.array([cur]))[0])
        if idx < 0:
            raise NotInPartition(k)
        digits[k] = idx
        cur = float(sys.tau(np.array([cur]))[0])
    return SymbolWord(digits)


def cylinder_of(sys: CookieCutterSystem, word: SymbolWord) -> Cylinder:
    """Interval rho_{w_1} o ... o rho_{w_n} ([0,1]), first digit outermost."""
    word = SymbolWord(word)
    arr = word.as_array()
    if np.any(arr >= sys.ell):
        raise ValueError(f"digit out of range for an {sys.ell}-branch system")
    lo, hi = 0.0, 1.0
    for d in arr[::-1]:
        a = float(sys.branches[d].inverse(lo))
        b = float(sys.branches[d].inverse(hi))
        lo, hi = (a, b) if a <= b else (b, a)
    return Cylinder(word, lo, hi)


def cylinder_bounds_many(sys: CookieCutterSystem, digits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized cylinder endpoints for a (count, depth) digit matrix."""
    count = digits.shape[0]
    lo = np.zeros(count)
    hi = np.ones(count)
    for col in range(digits.shape[1] - 1, -1, -1):
        d = digits[:, col]
        new_lo = np.empty(count)
        new_hi = np.empty(count)
        for i in range(sys.ell):
            m = d == i
            if np.any(m):
                a = sys.branches[i].inverse(lo[m])
                b = sys.branches[i].inverse(hi[m])
                new_lo[m] = np.minimum(a, b)
                new_hi[m] = np.maximum(a, b)
        lo, hi = new_lo, new_hi
    return lo, hi


def point_of_word(sys: CookieCutterSystem, digits: np.ndarray, t=0.5,
                  max_effective_depth: int = 64) -> np.ndarray:
    """rho_w(t) for each row of a (count, depth) digit matrix.

    Only the leading ``max_effective_depth`` digits are composed: deeper
    digits displace the point by less than (max contraction)^64, far below
    float64 resolution.
    """
    depth = min(digits.shape[1], max_effective_depth)
    count = digits.shape[0]
    x = np.full(count, float(t))
    for col in range(depth - 1, -1, -1):
        d = digits[:, col]
        nxt = np.empty(count)
        for i in range(sys.ell):
            m = d == i
            if np.any(m):
                nxt[m] = sys.branches[i].inverse(x[m])
        x = nxt
    return x


def sample_repeller(sys: CookieCutterSystem, depth: int, strategy: str = "midpoints",
                    seed: int | None = None, budget: int | None = None):
    """One representative per depth-n cylinder.

    strategy "midpoints": x = rho_w(1/2); "random": x = rho_w(u_w) with u_w
    an independent uniform draw keyed by (seed, word), so repeated calls with
    the same seed are identical and per-word draws do not depend on order.
    """
    budget = cylinder_budget() if budget is None else budget
    n_words = sys.ell**depth
    if n_words > budget:
        raise BudgetExceeded(f"{sys.ell}^{depth} exceeds budget {budget}")
    words = enumerate_words(sys.ell, depth)
    if strategy == "midpoints":
        xs = point_of_word(sys, words, 0.5)
    elif strategy == "random":
        if seed is None:
            raise ValueError("random strategy requires a seed")
        ts = counter_uniforms(seed, 0, n_words, stream=depth)
        xs = _points_with_leaf_values(sys, words, ts)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return [(SymbolWord(words[j]), float(xs[j])) for j in range(n_words)]


def _points_with_leaf_values(sys, digits, ts):
    x = np.asarray(ts, dtype=float).copy()
    for col in range(digits.shape[1] - 1, -1, -1):
        d = digits[:, col]
        for i in range(sys.ell):
            m = d == i
            if np.any(m):
                x[m] = sys.branches[i].inverse(x[m])
    return x


def enumerate_words(ell: int, depth: int) -> np.ndarray:
    """(ell^depth, depth) digit matrix in lexicographic order."""
    idx = np.arange(ell**depth)
    out = np.empty((len(idx), depth), dtype=np.uint8)
    for col in range(depth - 1, -1, -1):
        out[:, col] = idx % ell
        idx //= ell
    return out


BIRKHOFF_FIELDS = ("log_abs_tau_prime", "log_lambda")


def birkhoff_sum(sys: CookieCutterSystem, field_name: str, x: float, n: int) -> float:
    """Partial sum of log|tau'| or log lambda along the orbit of x."""
    if field_name not in BIRKHOFF_FIELDS:
        raise ValueError(f"field must be one of {BIRKHOFF_FIELDS}")
    total = 0.0
    cur = float(x)
    for k in range(n):
        idx = int(sys.branch_index(np.array([cur]))[0])
        if idx < 0:
            raise NotInPartition(k)
        if field_name == "log_abs_tau_prime":
            total += float(np.log(np.abs(sys.branches[idx].derivative(np.array([cur]))))[0])
        else:
            total += float(sys.log_lam(np.array([cur]))[0])
        cur = float(sys.tau(np.array([cur]))[0])
    return total


def birkhoff_sums_from_digits(sys: CookieCutterSystem, digits: np.ndarray):
    """(S_n log|tau'|, S_n log lambda) per row, evaluated at the branch level.

    Exact for affine systems with branch-constant lambda, where both
    observables depend only on the digit; the bulk sampling paths rely on it.
    """
    if not (sys.is_affine and sys.lam.branch_constant):
        raise NotBranchConstant("digit-level Birkhoff sums need branch-constant observables")
    log_tp = np.log(np.abs(np.array([b.slope for b in sys.branches])))
    log_lm = np.log(sys.lam.branch_values(sys.ell))
    d = np.asarray(digits)
    return log_tp[d].sum(axis=-1), log_lm[d].sum(axis=-1)
