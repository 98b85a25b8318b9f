"""Constructive decomposition of solutions of the product equation.

Given a characteristic function ``f`` solving

    prod_j f(y_j + y) = prod_j f(y_j - y),   sum_j y_j = 0,

the pipeline takes ``psi = -ln|f|``, verifies the chain of difference
identities that force ``psi`` to be quadratic plus a constant on each coset
of the doubled subgroup, turns the coset constants into a signed measure
``pi`` on the 2-torsion subgroup, identifies the phase as a character, and
resynthesizes ``f = (shift, .) exp(-phi) pi_hat``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BudgetExceeded,
    GroupcharError,
    HypothesisViolated,
    NotACharacter,
    NotASolution,
    NotDecomposable,
    VanishingCharFunction,
)
from .funceq import (
    TOL,
    DualFunction,
    EquationReport,
    Sampled,
    _all,
    _table,
    character_test,
    check_evenness,
    check_mixed_difference,
    check_norm_equation,
    check_parallelogram,
    check_product_equation,
    combine,
    scan_identity,
)
from .groups import FiniteAbelianGroup, GroupElement, IntegerBox, Subgroup, annihilator, cosets_mod, torsion_subgroups
from .spectral import (VANISHING_TOL, CharFunction, SignedMeasure, char_function, convolve, delta,
                       inverse_transform, random_distribution)
from .torus import TorusModel

CHAIN_BUDGET = 10**7


def vanishing_tol(dom) -> float:
    # box coefficients are closed forms: e^{-100} at the box edge is genuine, not zero
    return VANISHING_TOL if isinstance(dom, FiniteAbelianGroup) else float(np.finfo(float).tiny)


def psi_from_char(f: CharFunction, convention: str = "half") -> DualFunction:
    """``-ln|f|`` (``"half"``) or ``-ln|f|^2`` (``"full"``)."""
    if convention not in ("half", "full"):
        raise ValueError(f"unknown convention {convention!r}")
    mod = np.abs(f.values)
    i = int(np.argmin(mod))
    if mod[i] < vanishing_tol(f.group):
        where = f.group.label(i)
        raise VanishingCharFunction(where, f.values[i])
    psi = -np.log(mod)
    return DualFunction(f.group, 2 * psi if convention == "full" else psi)


# -- the difference chain ----------------------------------------------------

def _mode(sizes, budget, seed):
    return "exhaustive" if math.prod(sizes) <= budget else Sampled(seed)


def check_three_point(psi: DualFunction, mode="exhaustive", budget=CHAIN_BUDGET) -> EquationReport:
    """``psi(y1+y2+y) - psi(y1+y2-y) = psi(y1+y) - psi(y1-y) + psi(y2+y) - psi(y2-y)``."""
    dom = psi.group
    t = _table(psi)

    def residual(y1, y2, y):
        lhs = t[combine(dom, [(1, y1), (1, y2), (1, y)])] - t[combine(dom, [(1, y1), (1, y2), (-1, y)])]
        rhs = (t[combine(dom, [(1, y1), (1, y)])] - t[combine(dom, [(1, y1), (-1, y)])]
               + t[combine(dom, [(1, y2), (1, y)])] - t[combine(dom, [(1, y2), (-1, y)])])
        return np.abs(lhs - rhs)

    return scan_identity("three_point", dom, [_all(dom)] * 3, residual, mode, names=("y1", "y2", "y"), budget=budget)


def check_shifted_difference(psi: DualFunction, mode="exhaustive", budget=CHAIN_BUDGET) -> EquationReport:
    """``D_{2h} psi(y1+y2+y) = D_h psi(y1+y) - D_{-h} psi(y1-y) + D_{2h} psi(y2+y)``."""
    dom = psi.group
    t = _table(psi)

    def d(base, h, c):
        return t[combine(dom, base + [(c, h)])] - t[combine(dom, base)]

    def residual(y1, y2, y, h):
        lhs = d([(1, y1), (1, y2), (1, y)], h, 2)
        rhs = d([(1, y1), (1, y)], h, 1) - d([(1, y1), (-1, y)], h, -1) + d([(1, y2), (1, y)], h, 2)
        return np.abs(lhs - rhs)

    return scan_identity("shifted_difference", dom, [_all(dom)] * 4, residual, mode,
                         names=("y1", "y2", "y", "h"), budget=budget)


CHAIN_STEPS = (
    "evenness",
    "three_point",
    "shifted_difference",
    "cubic_mixed_difference",
    "quadratic_mixed_difference_doubled",
    "quadratic_mixed_difference",
)


@dataclass
class ProofChainReport:
    n: int
    steps: dict[str, EquationReport]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.steps.values())

    @property
    def first_failure(self) -> str | None:
        for name in CHAIN_STEPS:
            if name in self.steps and not self.steps[name].passed:
                return name
        return None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "passed": self.passed,
            "first_failure": self.first_failure,
            "steps": {k: v.to_dict() for k, v in self.steps.items()},
        }


def _doubled(dom):
    if isinstance(dom, FiniteAbelianGroup):
        return torsion_subgroups(dom)[1]
    return dom.doubled_mask


def run_proof_chain(psi: DualFunction, n: int, budget: int = CHAIN_BUDGET, seed: int = 0) -> ProofChainReport:
    """Evaluate every identity of the chain independently.

    Steps whose exhaustive cost exceeds ``budget`` switch to sampled mode.
    """
    dom = psi.group
    N = dom.size
    doubled = _doubled(dom)
    nd = int(np.count_nonzero(doubled)) if isinstance(doubled, np.ndarray) else doubled.order
    steps = {
        "evenness": check_evenness(psi),
        "three_point": check_three_point(psi, _mode([N] * 3, budget, seed), budget),
        "shifted_difference": check_shifted_difference(psi, _mode([N] * 4, budget, seed), budget),
        "cubic_mixed_difference": check_mixed_difference(psi, 3, None, _mode([N] * 3, budget, seed), budget=budget),
        "quadratic_mixed_difference_doubled": check_mixed_difference(
            psi, 2, doubled, _mode([nd, N, nd], budget, seed), budget=budget),
        "quadratic_mixed_difference": check_mixed_difference(psi, 2, None, _mode([N] * 3, budget, seed), budget=budget),
    }
    return ProofChainReport(n, steps)


# -- quadratic part and coset residuals --------------------------------------

def coset_residual_split(psi: DualFunction, tol: float = TOL) -> tuple[DualFunction, dict]:
    """Write ``psi = phi + r_alpha`` on each coset of the doubled subgroup.

    On a finite group ``phi`` is identically zero.  On an integer box ``phi`` is
    the quadratic form fitted from second differences along even steps and the
    cosets are the parity classes, keyed by elements of ``Z_2^q``.  Raises
    :class:`NotDecomposable` when the residual is not constant on some coset.
    """
    dom = psi.group
    values = psi.values
    if isinstance(dom, FiniteAbelianGroup):
        phi = DualFunction(dom, np.zeros(dom.order))
        cosets = cosets_mod(dom, torsion_subgroups(dom)[1])
        labels = cosets.labels
        reps = list(cosets.representatives)
        rep_values = values[[r.index for r in reps]]
    else:
        phi = DualFunction(dom, _fit_quadratic(psi))
        labels = dom.parity_index
        G2 = dom.parity_group
        reps = G2.elements()
        rep_idx = [dom.index_of(r.coords) for r in reps]
        rep_values = (values - phi.values)[rep_idx]
    par = check_parallelogram(phi, tol=max(tol, 1e-12 * float(np.nanmax(np.abs(phi.values)) + 1)))
    assert par.passed, f"fitted quadratic part violates the parallelogram law by {par.max_violation}"
    resid = values - phi.values
    deviation = np.abs(resid - rep_values[labels])
    worst = int(np.nanargmax(deviation))
    if deviation[worst] > tol:
        raise NotDecomposable(
            f"residual not constant on the coset of {reps[labels[worst]].coords}: deviation {deviation[worst]:.3e}")
    return phi, {r: float(v) for r, v in zip(reps, rep_values)}


def _fit_quadratic(psi: DualFunction) -> np.ndarray:
    """``phi(m) = m^T A m`` with ``A_ij = D_{2e_i} D_{2e_j} psi(0) / 8``."""
    box: IntegerBox = psi.group
    if box.M < 2:
        raise HypothesisViolated("quadratic fit needs M >= 2")
    q = box.q
    e = np.eye(q, dtype=int)
    at = lambda c: psi.values[box.index_of(c)]
    A = np.empty((q, q))
    for i in range(q):
        for j in range(q):
            A[i, j] = (at(2 * e[i] + 2 * e[j]) - at(2 * e[i]) - at(2 * e[j]) + at(0 * e[i])) / 8
    c = box.coords.astype(float)
    return np.einsum("ni,ij,nj->n", c, A, c)


# -- from residuals to a signed measure on the 2-torsion subgroup ------------

def pi_from_residuals(residuals: dict, G: FiniteAbelianGroup, signs: dict | None = None) -> SignedMeasure:
    """Invert ``g = sign * exp(-r_alpha)`` (constant on cosets of ``2G``).

    ``residuals`` (and ``signs``) map an element of each coset of the doubled
    subgroup to its constant.  The result lives on ``G`` and is supported on
    the 2-torsion subgroup, whose dual is exactly the coset space.
    """
    torsion, doubled = torsion_subgroups(G)
    assert annihilator(G, torsion).indices == doubled.indices
    cosets = cosets_mod(G, doubled)
    g = np.full(len(cosets), np.nan)
    for rep, r in residuals.items():
        s = 1.0 if signs is None else float(signs.get(rep, 1.0))
        g[cosets.labels[rep.index]] = s * math.exp(-r)
    if np.isnan(g).any():
        raise HypothesisViolated("a residual is required for every coset")
    if abs(g[cosets.labels[0]] - 1.0) > TOL:
        raise HypothesisViolated("the zero coset must carry residual 0")
    pi = inverse_transform(CharFunction(G, g[cosets.labels]))
    assert np.abs(pi.weights[~torsion.mask]).max(initial=0.0) < 1e-12
    return pi


# -- phase -------------------------------------------------------------------

def phase_split(f: CharFunction) -> tuple[CharFunction, CharFunction]:
    """``l = f / |f|`` and ``m = l^2``."""
    mod = np.abs(f.values)
    if np.nanmin(mod) < vanishing_tol(f.group):
        i = int(np.nanargmin(mod))
        raise VanishingCharFunction(f.group.label(i), f.values[i])
    l = f.values / mod
    return CharFunction(f.group, l), CharFunction(f.group, l * l)


def bezout_pair(n: int) -> tuple[int, int]:
    """``(r, s)`` with ``2r + ns = 1``, ``s`` in ``{-1, 1}`` and ``|r|`` minimal."""
    if n % 2 == 0:
        raise HypothesisViolated("n must be odd")
    candidates = [((1 - n * s) // 2, s) for s in (1, -1)]
    return min(candidates, key=lambda rs: (abs(rs[0]), -rs[0]))


def shift_from_phase(l: CharFunction, n: int, tol: float = TOL):
    """Recover the character ``l = m^r`` from ``l^n = 1`` and ``m = l^2``."""
    if n % 2 == 0:
        raise HypothesisViolated(f"n = {n} is even")
    dev = np.nanmax(np.abs(l.values ** n - 1))
    if dev > tol:
        raise HypothesisViolated(f"l^{n} differs from 1 by {dev:.3e}")
    m = CharFunction(l.group, l.values ** 2)
    rep = check_norm_equation(m, tol=tol)
    if not rep.passed:
        raise NotDecomposable(f"m = l^2 violates the norm equation at {rep.witness}")
    r, _ = bezout_pair(n)
    try:
        return character_test(CharFunction(l.group, m.values ** r), tol=tol)
    except NotACharacter as exc:
        raise NotDecomposable(f"m^{r} is not a character: {exc}") from exc


def real_phase_shifts(l: CharFunction, tol: float = TOL) -> list[GroupElement]:
    """All ``x`` with ``l(y) conj((x, y))`` real and constant on cosets of ``2Y``."""
    G = l.group
    labels = cosets_mod(G, torsion_subgroups(G)[1]).labels
    _, first = np.unique(labels, return_index=True)
    out = []
    for start in range(0, G.order, 256):
        rows = np.arange(start, min(start + 256, G.order))
        h = l.values[None, :] * np.conj(G.pairing_matrix(rows))
        real = np.abs(h.imag).max(axis=1) <= tol
        coset_const = np.abs(h - h[:, first[labels]]).max(axis=1) <= tol
        out.extend(G.element(int(i)) for i in rows[real & coset_const])
    return out


# -- full pipeline -----------------------------------------------------------

@dataclass
class DecompositionResult:
    shift: GroupElement | np.ndarray
    quadratic: DualFunction
    residuals: dict
    pi: SignedMeasure
    pi_is_distribution: bool
    resynthesis_error: float
    path: str
    n: int
    equation: EquationReport
    chain: ProofChainReport
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        shift = list(self.shift.coords) if isinstance(self.shift, GroupElement) else [float(t) for t in self.shift]
        q = self.quadratic
        return {
            "n": self.n,
            "path": self.path,
            "shift": shift,
            "quadratic": [None if np.isnan(v) else float(v) for v in q.values],
            "quadratic_domain": str(q.group),
            "residuals": [{"coset": list(k.coords), "r": v} for k, v in self.residuals.items()],
            "pi": self.pi.to_dict(),
            "pi_is_distribution": self.pi_is_distribution,
            "resynthesis_error": self.resynthesis_error,
            "equation": self.equation.to_dict(),
            "proof_chain": self.chain.to_dict(),
            "details": self.details,
        }


def _stage(name):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, et, exc, tb):
            if exc is not None and isinstance(exc, GroupcharError) and not hasattr(exc, "stage"):
                exc.stage = name
            return False

    return _Ctx()


def diagnostic(exc: Exception) -> dict:
    """JSON-friendly description of a pipeline failure."""
    out = {"stage": getattr(exc, "stage", None), "reason": type(exc).__name__, "message": str(exc)}
    cause = exc.__cause__
    if cause is not None:
        out["cause"] = type(cause).__name__
    if isinstance(exc, NotASolution):
        out["report"] = exc.report.to_dict()
    return out


def _as_char(obj) -> CharFunction:
    if isinstance(obj, SignedMeasure):
        return char_function(obj)
    if isinstance(obj, TorusModel):
        return obj.char_function()
    if isinstance(obj, CharFunction):
        return obj
    raise TypeError(f"cannot decompose {type(obj).__name__}")


def decompose_full(
    mu,
    n: int,
    *,
    arg_bound: int | None = None,
    budget: int = 10**8,
    chain_budget: int = CHAIN_BUDGET,
    seed: int = 0,
    tol: float = TOL,
) -> DecompositionResult:
    """Factor ``mu`` (a measure, torus model or characteristic function) as ``delta_x * gamma * pi``.

    Stages: ``equation`` -> ``psi`` -> ``proof_chain`` -> ``coset_split`` ->
    ``phase`` -> ``pi`` -> ``resynthesis``.  Failures carry the stage name in
    ``exc.stage``; see :func:`diagnostic`.

    The phase stage follows the odd-power route (``l^n = 1`` with ``n`` odd,
    ``l = (l^2)^r``) when its hypotheses hold.  Otherwise, on finite groups, it
    looks for a shift making the phase real and coset-constant, the form every
    solution with nonvanishing transform has; on boxes it requires ``l`` to be
    a character outright.
    """
    f = _as_char(mu)
    dom = f.group
    with _stage("equation"):
        mode = "exhaustive"
        try:
            eq = check_product_equation(f, n, mode, arg_bound=arg_bound, tol=tol, budget=budget)
        except BudgetExceeded:
            eq = check_product_equation(f, n, Sampled(seed), arg_bound=arg_bound, tol=tol)
        if not eq.passed:
            raise NotASolution(eq)
    with _stage("psi"):
        psi = psi_from_char(f, "half")
    with _stage("proof_chain"):
        chain = run_proof_chain(psi, n, chain_budget, seed)
        if not chain.passed:
            raise NotDecomposable(f"difference identity {chain.first_failure} fails")
    with _stage("coset_split"):
        phi, residuals = coset_residual_split(psi, tol)
    details = {}
    with _stage("phase"):
        l, _ = phase_split(f)
        odd_route = n % 2 == 1 and np.nanmax(np.abs(l.values ** n - 1)) <= tol
        signs = None
        if odd_route:
            path = "odd_power"
            shift = shift_from_phase(l, n, tol)
            if isinstance(dom, FiniteAbelianGroup):
                details["character_shift"] = list(shift.coords)
        elif isinstance(dom, FiniteAbelianGroup):
            path = "real_phase"
        else:
            path = "character"
            shift = character_test(l, tol)
        if isinstance(dom, FiniteAbelianGroup):
            candidates = real_phase_shifts(l, tol)
            if not candidates:
                raise NotDecomposable("no shift makes the phase real and constant on cosets of 2Y")
            if odd_route:
                assert any(c == shift for c in candidates)
            shift = candidates[0]
            h = l.values * np.conj(dom.pairing_values(shift.index, _all(dom)))
            signs = {rep: float(np.sign(h[rep.index].real)) for rep in residuals}
    with _stage("pi"):
        group = dom if isinstance(dom, FiniteAbelianGroup) else dom.parity_group
        pi = pi_from_residuals(residuals, group, signs)
    with _stage("resynthesis"):
        synth = resynthesize(dom, shift, phi, pi)
        err = float(np.nanmax(np.abs(f.values - synth)))
        if err >= tol:
            raise NotDecomposable(f"resynthesis error {err:.3e}")
    return DecompositionResult(shift, phi, residuals, pi, pi.is_distribution, err, path, n, eq, chain, details)


def resynthesize(dom, shift, phi: DualFunction, pi: SignedMeasure) -> np.ndarray:
    """``(shift, y) exp(-phi(y)) pi_hat(y)`` over the domain."""
    pi_hat = char_function(pi).values
    if isinstance(dom, FiniteAbelianGroup):
        return dom.pairing_values(shift.index, _all(dom)) * np.exp(-phi.values) * pi_hat
    character = np.exp(1j * (dom.coords @ np.asarray(shift, dtype=float)))
    return character * np.exp(-phi.values) * pi_hat[dom.parity_index]


# -- brute-force oracle ------------------------------------------------------

def grid_distributions(N: int, K: int) -> np.ndarray:
    """All distributions on ``N`` points with weights in ``{0, 1/K, ..., 1}``."""
    rows = []
    for bars in itertools.combinations(range(K + N - 1), N - 1):
        edges = (-1,) + bars + (K + N - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(N)])
    return np.array(rows, dtype=float) / K


def bruteforce_theorem_oracle(G: FiniteAbelianGroup, n: int, K: int, budget: int = 10**6) -> dict:
    """Compare "solves the product equation with nonvanishing transform" with
    "decompose_full succeeds" over every grid distribution with denominator ``K``.
    """
    N = G.order
    count = math.comb(K + N - 1, N - 1)
    if count > budget:
        raise BudgetExceeded(count, budget)
    if N ** n > budget:
        raise BudgetExceeded(N ** n, budget)
    W = grid_distributions(N, K)
    P = G.pairing_matrix()
    F = W @ P.T
    nonvanishing = np.abs(F).min(axis=1) >= VANISHING_TOL
    solving = np.zeros(len(W), dtype=bool)
    decomposed = np.zeros(len(W), dtype=bool)
    pi_dist = 0
    point_masses = 0
    shift_ok = 0
    reasons: dict[str, int] = {}
    mismatches = []
    for i, w in enumerate(W):
        f = CharFunction(G, F[i])
        solving[i] = nonvanishing[i] and check_product_equation(f, n).passed
        try:
            res = decompose_full(SignedMeasure(G, w), n)
            decomposed[i] = True
            pi_dist += res.pi_is_distribution
            shift_ok += bool((G.scale(2 * n, res.shift.index) == 0))
        except GroupcharError as exc:
            key = f"{getattr(exc, 'stage', None)}:{type(exc).__name__}"
            reasons[key] = reasons.get(key, 0) + 1
        if solving[i]:
            point_masses += bool(np.isclose(w.max(), 1.0))
        if solving[i] != decomposed[i] and len(mismatches) < 20:
            mismatches.append({"weights": w.tolist(), "solves": bool(solving[i]), "decomposed": bool(decomposed[i])})
    n_mis = int((solving != decomposed).sum())
    return {
        "group": str(G),
        "n": n,
        "grid": K,
        "distributions": len(W),
        "nonvanishing": int(nonvanishing.sum()),
        "solving": int(solving.sum()),
        "decomposed": int(decomposed.sum()),
        "mismatch_count": n_mis,
        "mismatches": mismatches,
        "pi_is_distribution": pi_dist,
        "shift_annihilated_by_2n": shift_ok,
        "point_masses_among_solving": point_masses,
        "failure_reasons": dict(sorted(reasons.items())),
    }


def synthesize_solution(G: FiniteAbelianGroup, n: int, rng: np.random.Generator, *,
                        positive: bool = False, margin: float = 1e-6) -> tuple[SignedMeasure, GroupElement, SignedMeasure]:
    """Random ``mu = delta_x * pi`` solving the product equation.

    ``pi`` is a Dirichlet draw on the 2-torsion subgroup with ``|pi_hat| >= margin``
    and ``x`` is uniform among elements with ``2n x = 0``.  With ``positive=True``
    the draw is conditioned on ``mu_hat^n > 0``: ``n x = 0`` and ``pi_hat > 0``.
    Returns ``(mu, x, pi)``.
    """
    kernel, _ = torsion_subgroups(G)
    k = n if positive else 2 * n
    shifts = np.flatnonzero(G.scale(k, np.arange(G.order)) == G.zero_index)
    for _ in range(10_000):
        pi = random_distribution(G, rng, kernel)
        pi_hat = char_function(pi).values.real
        if (pi_hat > margin).all() if positive else (np.abs(pi_hat) >= margin).all():
            break
    else:
        raise NotDecomposable("could not draw a 2-torsion measure with nonvanishing transform")
    x = G.element(int(rng.choice(shifts)))
    return convolve(delta(G, x), pi), x, pi
