"""Equivariant estimation of ``n * theta`` from a shifted sample.

A sample ``x = (x_1, ..., x_n)`` is drawn i.i.d. from ``mu_theta = mu(. - theta)``.
Estimators in the class considered here satisfy ``f(x + c) = f(x) + n c``; every
such estimator is the sum plus a function ``g`` of the shift-invariant
differences ``z = (x_2 - x_1, ..., x_n - x_1)``.

The phase-corrected estimator multiplies ``(f(x), y)`` by the unit phase of
``E_0[(f(x), -y) | z]``.  Everything here is computed by exact enumeration on
small finite groups, with a Monte-Carlo fallback for the risk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, ConditionUndefined, DegenerateConditional, StructuralError
from .funceq import GENERATOR, Sampled, check_product_equation
from .groups import FiniteAbelianGroup, GroupElement
from .spectral import SignedMeasure, char_function

EXACT_BUDGET = 10**7
ARG_IMAG_TOL = 1e-9
ARG_REAL_MIN = 1e-12
DEGENERATE_TOL = 1e-12


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _idx(G: FiniteAbelianGroup, a) -> int:
    if isinstance(a, GroupElement):
        if a.group != G:
            raise StructuralError(f"{a} is not in {G}")
        return a.index
    if isinstance(a, (int, np.integer)):
        return int(a)
    return G.index_of(a)


def _require_distribution(mu: SignedMeasure):
    if not mu.is_distribution:
        raise StructuralError("mu must be a probability distribution")


def sample_shifted(mu: SignedMeasure, theta, n: int, count: int, seed: int) -> np.ndarray:
    """``count`` i.i.d. n-samples from ``mu_theta``, as element indices of shape ``(count, n)``."""
    _require_distribution(mu)
    G = mu.group
    p = np.clip(mu.weights, 0.0, None)
    draws = _rng(seed).choice(G.order, size=(count, n), p=p / p.sum())
    return G.add(draws, _idx(G, theta))


# -- difference tuples -------------------------------------------------------

def differences(G: FiniteAbelianGroup, x: np.ndarray) -> np.ndarray:
    """Index of ``z = (x_2 - x_1, ..., x_n - x_1)`` in mixed radix (first difference slowest)."""
    x = np.atleast_2d(x)
    out = np.zeros(len(x), dtype=np.int64)
    for j in range(1, x.shape[1]):
        out = out * G.order + G.sub(x[:, j], x[:, 0])
    return out


def difference_labels(G: FiniteAbelianGroup, n: int, z: int) -> list[list[int]]:
    parts = []
    for _ in range(n - 1):
        z, r = divmod(int(z), G.order)
        parts.append(G.label(r))
    return parts[::-1]


def _z_index(G: FiniteAbelianGroup, z) -> int:
    out = 0
    for d in z:
        out = out * G.order + _idx(G, d)
    return out


def _support_tuples(mu: SignedMeasure, n: int, budget: int = EXACT_BUDGET) -> tuple[np.ndarray, np.ndarray]:
    """All n-tuples of support points with their product probabilities."""
    supp = np.flatnonzero(mu.weights > 0)
    total = len(supp) ** n
    if mu.group.order ** n > budget:
        raise BudgetExceeded(mu.group.order ** n, budget)
    grids = np.stack(np.unravel_index(np.arange(total), (len(supp),) * n), axis=1)
    x = supp[grids]
    w = np.prod(mu.weights[x], axis=1)
    return x, w


# -- estimators ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EstimatorSpec:
    """The sum estimator, optionally perturbed by ``g(z)``, or the phase-corrected one.

    ``perturbation`` is a table of element indices over the ``|G|^(n-1)``
    difference tuples; ``optimal=True`` applies the phase correction to the
    perturbed sum, which by construction does not depend on the perturbation.
    """

    group: FiniteAbelianGroup
    n: int
    perturbation: np.ndarray | None = None
    optimal: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.perturbation is not None:
            g = np.asarray(self.perturbation, dtype=np.int64)
            if g.shape != (self.group.order ** (self.n - 1),):
                raise StructuralError(f"perturbation needs {self.group.order ** (self.n - 1)} entries")
            object.__setattr__(self, "perturbation", g)

    @property
    def name(self) -> str:
        base = "sum" if self.perturbation is None else "sum+g(z)"
        return f"optimal[{base}]" if self.optimal else base

    def point(self, x: np.ndarray) -> np.ndarray:
        """Group-valued estimate ``f(x)`` for rows of ``x`` (not defined for the optimal estimator)."""
        if self.optimal:
            raise StructuralError("the phase-corrected estimator is defined through its pairings only")
        G = self.group
        x = np.atleast_2d(x)
        s = G.total([x[:, j] for j in range(x.shape[1])])
        if self.perturbation is not None:
            s = G.add(s, self.perturbation[differences(G, x)])
        return s

    def phase(self, mu: SignedMeasure, x: np.ndarray, y) -> np.ndarray:
        """``(f(x), y)`` for rows of ``x``."""
        G = self.group
        y = _idx(G, y)
        x = np.atleast_2d(x)
        if not self.optimal:
            return G.pairing_values(self.point(x), y)
        base = EstimatorSpec(G, self.n, self.perturbation)
        table = conditional_table(mu, self.n, base)
        z = differences(G, x)
        if (table.probability[z] <= 0).any():
            bad = int(z[np.argmin(table.probability[z])])
            raise ConditionUndefined(f"P_0(z) = 0 for z = {difference_labels(G, self.n, bad)}")
        c = np.conj(table.expectation[z, y])
        mod = np.abs(c)
        if (mod < DEGENERATE_TOL).any():
            bad = int(z[np.argmin(mod)])
            raise DegenerateConditional(
                f"E_0[(f(x), -y) | z] vanishes at y={G.label(y)}, z={difference_labels(G, self.n, bad)}")
        return G.pairing_values(base.point(x), y) * c / mod


def random_perturbation(G: FiniteAbelianGroup, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random map from difference tuples to ``G``."""
    return rng.integers(G.order, size=G.order ** (n - 1))


# -- conditional expectations --------------------------------------------------

@dataclass
class ConditionalTable:
    """``E_0[(f(x), y) | z]`` for every difference tuple and every ``y``.

    ``probability[z]`` is ``P_0(z)``; rows with zero probability hold NaN.
    """

    group: FiniteAbelianGroup
    n: int
    probability: np.ndarray
    expectation: np.ndarray


def conditional_table(mu: SignedMeasure, n: int, estimator: EstimatorSpec | None = None,
                      budget: int = EXACT_BUDGET) -> ConditionalTable:
    _require_distribution(mu)
    G = mu.group
    if estimator is None:
        estimator = EstimatorSpec(G, n)
    x, w = _support_tuples(mu, n, budget)
    z = differences(G, x)
    s = estimator.point(x)
    acc = np.zeros((G.order ** (n - 1), G.order))
    np.add.at(acc, (z, s), w)
    prob = acc.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        expectation = (acc @ G.pairing_matrix()) / prob[:, None]
    expectation[prob <= 0] = np.nan
    return ConditionalTable(G, n, prob, expectation)


def conditional_phase_exact(mu: SignedMeasure, n: int, y, z: Sequence, estimator: EstimatorSpec | None = None) -> complex:
    """``E_0[(f(x), -y) | z]`` with ``f`` the sum (or ``estimator``), by enumeration over ``x_1``."""
    _require_distribution(mu)
    G = mu.group
    if len(z) != n - 1:
        raise StructuralError(f"z must have {n - 1} entries")
    zi = [_idx(G, d) for d in z]
    x1 = np.arange(G.order)
    x = np.stack([x1] + [G.add(x1, d) for d in zi], axis=1)
    w = np.prod(mu.weights[x], axis=1)
    total = w.sum()
    if total <= 0:
        raise ConditionUndefined(f"P_0(z) = 0 for z = {[G.label(d) for d in zi]}")
    f = (estimator or EstimatorSpec(G, n)).point(x)
    return complex((w * G.pairing_values(f, G.neg(_idx(G, y)))).sum() / total)


def optimal_estimate_phase(mu: SignedMeasure, n: int, x: Sequence, y, perturbation: np.ndarray | None = None) -> complex:
    """``(f_0(x), y) = (f(x), y) E_0[(f(x), -y)|z] / |E_0[(f(x), -y)|z]|`` with ``f = sum + g(z)``."""
    G = mu.group
    xi = np.array([[_idx(G, a) for a in x]])
    f = EstimatorSpec(G, n, perturbation)
    z = differences(G, xi)[0]
    e = conditional_phase_exact(mu, n, y, difference_labels(G, n, z), f)
    if abs(e) < DEGENERATE_TOL:
        raise DegenerateConditional(f"|E_0[(f(x), -y) | z]| = {abs(e):.3e}")
    return complex(G.pairing_values(f.point(xi), _idx(G, y))[0] * e / abs(e))


# -- risk ---------------------------------------------------------------------

@dataclass
class RiskEstimate:
    value: float
    stderr: float
    mode: str | Sampled

    def to_dict(self) -> dict:
        if isinstance(self.mode, Sampled):
            mode = {"monte_carlo": {"seed": self.mode.seed, "samples": self.mode.count, "generator": GENERATOR}}
        else:
            mode = self.mode
        return {"value": self.value, "stderr": self.stderr, "mode": mode}


def risk(estimator: EstimatorSpec, mu: SignedMeasure, theta, n: int, y,
         mode: str | Sampled = "exact", budget: int = EXACT_BUDGET) -> RiskEstimate:
    """``E_theta |(f(x), y) - (n theta, y)|^2``."""
    _require_distribution(mu)
    G = mu.group
    if estimator.group != G or estimator.n != n:
        raise StructuralError("estimator does not match the group or sample size")
    th = _idx(G, theta)
    target = G.pairing_values(G.scale(n, th), _idx(G, y))
    if mode == "exact":
        x, w = _support_tuples(mu, n, budget)
        x = G.add(x, th)
        loss = np.abs(estimator.phase(mu, x, y) - target) ** 2
        return RiskEstimate(float(min(w @ loss, 4.0)), 0.0, "exact")
    if isinstance(mode, Sampled):
        x = sample_shifted(mu, th, n, mode.count, mode.seed)
        loss = np.abs(estimator.phase(mu, x, y) - target) ** 2
        stderr = float(loss.std(ddof=1) / math.sqrt(len(loss))) if len(loss) > 1 else float("inf")
        return RiskEstimate(float(loss.mean()), stderr, mode)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class DominanceReport:
    worst_gap: float
    worst: dict | None
    comparisons: int
    mode: str | Sampled
    degenerate: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.worst_gap <= 0.0

    def to_dict(self) -> dict:
        return {"worst_gap": self.worst_gap, "worst": self.worst, "comparisons": self.comparisons,
                "passed": self.passed, "degenerate": self.degenerate}


def risk_dominance(mu: SignedMeasure, n: int, perturbations: Sequence[np.ndarray],
                   thetas: Sequence | None = None, ys: Sequence | None = None,
                   mode: str | Sampled = "exact", slack: float = 1e-12) -> DominanceReport:
    """Compare the phase-corrected estimator against ``sum + g(z)`` for each ``g``.

    The gap is ``risk(optimal) - risk(competitor) - allowance`` where the
    allowance is ``slack`` in exact mode and three combined standard errors in
    Monte-Carlo mode.  A nonpositive worst gap means dominance held everywhere.
    """
    G = mu.group
    thetas = range(G.order) if thetas is None else [_idx(G, t) for t in thetas]
    ys = range(G.order) if ys is None else [_idx(G, v) for v in ys]
    opt = EstimatorSpec(G, n, optimal=True)
    worst_gap, worst, count = -math.inf, None, 0
    degenerate = set()
    competitors = [EstimatorSpec(G, n)] + [EstimatorSpec(G, n, g) for g in perturbations]
    for t in thetas:
        for y in ys:
            try:
                r0 = risk(opt, mu, t, n, y, mode)
            except DegenerateConditional:
                degenerate.add(y)
                continue
            for k, comp in enumerate(competitors):
                r1 = risk(comp, mu, t, n, y, mode)
                allowance = slack if mode == "exact" else 3 * math.hypot(r0.stderr, r1.stderr)
                gap = r0.value - r1.value - allowance
                count += 1
                if gap > worst_gap:
                    worst_gap = gap
                    worst = {"theta": G.label(t), "y": G.label(y), "competitor": k,
                             "risk_optimal": r0.value, "risk_competitor": r1.value}
    return DominanceReport(float(worst_gap), worst, count, mode, [G.label(y) for y in sorted(degenerate)])


# -- the optimality criterion ----------------------------------------------------

@dataclass
class OptimalityReport:
    n: int
    arg_zero: bool
    arg_witness: dict | None
    conditional_real: bool
    eq3_passed: bool
    eq3: dict
    power_positive: bool
    power_witness: list | None

    @property
    def condition_b(self) -> bool:
        return self.eq3_passed and self.power_positive

    @property
    def equivalent(self) -> bool:
        return self.arg_zero == self.condition_b

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "arg_zero": self.arg_zero,
            "arg_witness": self.arg_witness,
            "conditional_real": self.conditional_real,
            "eq3_passed": self.eq3_passed,
            "eq3": self.eq3,
            "power_positive": self.power_positive,
            "power_witness": self.power_witness,
            "condition_b": self.condition_b,
            "equivalent": self.equivalent,
            "discrepancy": None if self.equivalent else {"arg_zero": self.arg_zero, "condition_b": self.condition_b},
        }


def optimality_check(mu: SignedMeasure, n: int, budget: int = EXACT_BUDGET) -> OptimalityReport:
    """Evaluate both sides of the sum-estimator optimality criterion.

    (a) ``arg E_0[(sum x, y) | z] = 0`` for every ``y`` and every ``z`` of positive
    probability, tested as ``|Im| <= 1e-9`` and ``Re >= 1e-12``.
    (b) the product equation for ``mu_hat`` together with ``mu_hat(y)^n > 0``.

    ``conditional_real`` records the weaker statement that every conditional
    expectation is real.  Disagreement between (a) and (b) is reported, never raised.
    """
    G = mu.group
    table = conditional_table(mu, n, budget=budget)
    live = np.flatnonzero(table.probability > 0)
    e = table.expectation[live]
    bad = (np.abs(e.imag) > ARG_IMAG_TOL) | (e.real < ARG_REAL_MIN)
    witness = None
    if bad.any():
        # lexicographic in (y, z)
        zi, yi = np.nonzero(bad)
        k = np.lexsort((live[zi], yi))[0]
        z, y = int(live[zi[k]]), int(yi[k])
        val = table.expectation[z, y]
        witness = {"y": G.label(y), "z": difference_labels(G, n, z),
                   "conditional": [float(val.real), float(val.imag)]}
    f = char_function(mu)
    eq3 = check_product_equation(f, n, budget=budget * 10)
    power = f.values ** n
    pbad = (np.abs(power.imag) > ARG_IMAG_TOL) | (power.real < ARG_REAL_MIN)
    pw = G.label(int(np.flatnonzero(pbad)[0])) if pbad.any() else None
    return OptimalityReport(
        n=n,
        arg_zero=not bad.any(),
        arg_witness=witness,
        conditional_real=bool((np.abs(e.imag) <= ARG_IMAG_TOL).all()),
        eq3_passed=eq3.passed,
        eq3=eq3.to_dict(),
        power_positive=not pbad.any(),
        power_witness=pw,
    )
