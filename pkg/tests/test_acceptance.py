"""Acceptance criteria, each at its stated tolerance and time limit.

Every test prints one ``criterion k: PASS|FAIL ...`` line before asserting.
"""
import math
import time

import numpy as np
import pytest

from groupchar.decompose import (bruteforce_theorem_oracle, CHAIN_STEPS, decompose_full, diagnostic, phase_split,
                                 psi_from_char, run_proof_chain, synthesize_solution)
from groupchar.errors import NotACharacter
from groupchar.estimation import optimality_check, random_perturbation, risk_dominance
from groupchar.funceq import (DualFunction, character_test, check_additive_equation, check_power_law,
                              check_product_equation, lemma2_oracle)
from groupchar.groups import FiniteAbelianGroup, GroupElement, parse_group
from groupchar.spectral import CharFunction, SignedMeasure, char_function, convolve, inverse_transform, random_distribution
from groupchar.torus import (cubic_phase_gaussian, density_min, parity_tilted_gaussian, parity_tilted_product,
                             smallest_positive_width)

SEED = 20261016
SOLUTION_GROUPS = ("Z2xZ4", "Z2xZ2xZ3")


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def test_criterion_1_forward_closure(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst, checked = 0.0, 0
    for spec in SOLUTION_GROUPS:
        G = parse_group(spec)
        for n in (3, 4, 5):
            for _ in range(100):
                mu, _, _ = synthesize_solution(G, n, rng)
                worst = max(worst, check_product_equation(char_function(mu), n).max_violation)
                checked += 1
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 30
    report(1, ok, f"{checked} synthesized solutions, max violation {worst:.2e}, {elapsed:.1f}s")
    assert worst < 1e-10
    assert elapsed < 30


def test_criterion_2_finite_group_oracle(report):
    t0 = time.perf_counter()
    reps = {spec: bruteforce_theorem_oracle(parse_group(spec), 3, 6) for spec in ("Z3", "Z4", "Z2xZ2", "Z6")}
    elapsed = time.perf_counter() - t0
    mismatches = sum(r["mismatch_count"] for r in reps.values())
    z3 = reps["Z3"]
    z3_points = z3["solving"] == z3["point_masses_among_solving"]
    ok = mismatches == 0 and z3_points and elapsed < 120
    counts = ", ".join(f"{k}: {r['solving']}/{r['distributions']}" for k, r in reps.items())
    report(2, ok, f"solving/grid {counts}; mismatches {mismatches}; Z3 solutions all point masses {z3_points}; "
                  f"{elapsed:.1f}s")
    assert mismatches == 0
    assert z3_points
    assert elapsed < 120


def test_criterion_3_parity_tilted_circle(report):
    t0 = time.perf_counter()
    model = parity_tilted_gaussian(0.1, 10)
    cert = density_min(model, 2048)
    eq = check_product_equation(model.char_function(), 3, arg_bound=3)
    res = decompose_full(model, 3)
    m = res.quadratic.group.coords[:, 0]
    phi_err = float(np.abs(res.quadratic.values - m * m).max())
    r_odd = [v for k, v in res.residuals.items() if k.coords == (1,)][0]
    target = (1 - math.exp(0.1)) / 2
    w_err = abs(res.pi.weights[1] - target)
    elapsed = time.perf_counter() - t0
    ok = (cert.certified and eq.max_violation < 1e-12 and phi_err < 1e-12 and abs(r_odd + 0.1) < 1e-12
          and w_err < 1e-12 and not res.pi_is_distribution and elapsed < 60)
    report(3, ok, f"density margin {cert.margin:.4f}, violation {eq.max_violation:.1e} over {eq.tuples_checked} "
                  f"tuples, r_odd {r_odd:.12f}, pi weight {res.pi.weights[1]:.9f} (signed), {elapsed:.1f}s")
    assert cert.certified
    assert eq.max_violation < 1e-12
    assert phi_err < 1e-12 and abs(r_odd + 0.1) < 1e-12
    assert w_err < 1e-12 and not res.pi_is_distribution
    assert elapsed < 60


def test_criterion_4_cubic_phase(report):
    t0 = time.perf_counter()
    scan = smallest_positive_width([0.5 * k for k in range(1, 11)], 10, 2048)
    a = scan["a"]
    model = cubic_phase_gaussian(a, 10)
    f = model.char_function()
    eq = check_product_equation(f, 4)
    k = f.group.coords[:, 0]
    fourth_err = float(np.abs(f.values ** 4 - np.exp(-4 * a * k * k)).max())
    fourth_positive = bool((f.values ** 4).real.min() > 0 and np.abs((f.values ** 4).imag).max() < 1e-15)
    l, _ = phase_split(f)
    try:
        character_test(l)
        witness = None
    except NotACharacter as exc:
        witness = exc.witness
    l1, l2 = (l.values[f.group.index_of((k,))] for k in (1, 2))
    try:
        decompose_full(model, 4)
        stage = None
    except Exception as exc:
        stage = diagnostic(exc)["stage"]
    elapsed = time.perf_counter() - t0
    ok = (a is not None and eq.max_violation < 1e-12 and fourth_err < 1e-12 and fourth_positive
          and witness == ([1], [1]) and abs(l1 ** 2 + 1) < 1e-12 and abs(l2 - 1) < 1e-12 and stage == "phase"
          and elapsed < 60)
    report(4, ok, f"smallest certified a = {a}, violation {eq.max_violation:.1e}, f^4 error {fourth_err:.1e}, "
                  f"witness {witness}, l(1)^2 = {l1 ** 2:.3f}, l(2) = {l2:.3f}, exits at stage {stage}, "
                  f"{elapsed:.1f}s")
    assert a == 1.0
    assert eq.max_violation < 1e-12
    assert fourth_err < 1e-12 and fourth_positive
    assert witness == ([1], [1])
    assert stage == "phase"
    assert elapsed < 60


def test_criterion_5_parity_tilted_torus(report):
    t0 = time.perf_counter()
    model = parity_tilted_product(2, [4, 5], 8)
    total = model.coefficient_sum_bound()
    cert = density_min(model, 256)
    eq = check_product_equation(model.char_function(), 3)
    res = decompose_full(model, 3, arg_bound=3)
    per_coord = [res.residuals[GroupElement(parse_group("Z2xZ2"), c)] for c in ((1, 0), (0, 1))]
    elapsed = time.perf_counter() - t0
    ok = (total < 2 and cert.certified and eq.max_violation < 1e-12
          and np.allclose(per_coord, [-1, -2], atol=1e-12, rtol=0) and elapsed < 60)
    report(5, ok, f"coefficient sum {total:.4f}, density margin {cert.margin:.4f}, violation "
                  f"{eq.max_violation:.1e} over {eq.tuples_checked} tuples, residuals {per_coord}, {elapsed:.1f}s")
    assert total < 2
    assert cert.certified
    assert eq.max_violation < 1e-12
    assert np.allclose(per_coord, [-1, -2], atol=1e-12, rtol=0)
    assert elapsed < 60


def _random_even(G, rng):
    v = rng.normal(size=G.order)
    v = v + v[G.neg(np.arange(G.order))]
    return DualFunction(G, v - v[0])


def test_criterion_6_proof_chain(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 6)
    worst = {s: 0.0 for s in CHAIN_STEPS}
    for i in range(50):
        G = parse_group(SOLUTION_GROUPS[i % 2])
        n = (3, 4, 5)[i % 3]
        mu, _, _ = synthesize_solution(G, n, rng)
        chain = run_proof_chain(psi_from_char(char_function(mu), "full"), n)
        for s, r in chain.steps.items():
            worst[s] = max(worst[s], r.max_violation)
    caught = 0
    for i in range(50):
        G = parse_group(SOLUTION_GROUPS[i % 2])
        psi = _random_even(G, rng)
        assert not check_additive_equation(psi, 3).passed
        caught += run_proof_chain(psi, 3).first_failure is not None
    elapsed = time.perf_counter() - t0
    positives_ok = max(worst.values()) < 1e-9
    ok = positives_ok and caught == 50 and elapsed < 60
    report(6, ok, f"max step violation on solutions {max(worst.values()):.1e}; non-solutions flagged {caught}/50; "
                  f"{elapsed:.1f}s")
    assert positives_ok
    assert caught == 50
    assert elapsed < 60


def test_criterion_7_character_oracle(report):
    t0 = time.perf_counter()
    odd = lemma2_oracle(parse_group("Z3"), parse_group("Z3"), 3)
    even = lemma2_oracle(parse_group("Z2"), parse_group("Z2"), 2)
    elapsed = time.perf_counter() - t0
    ok = (odd["functions"] == 3 ** 9 and odd["non_character_survivors"] == 0 and odd["mismatches"] == 0
          and even["non_character_survivors"] >= 1 and elapsed < 60)
    report(7, ok, f"Z3xZ3: {odd['hypotheses_hold']} of {odd['functions']} meet the hypotheses, all characters; "
                  f"Z2xZ2 with n=2: {even['non_character_survivors']} non-character survivors; {elapsed:.1f}s")
    assert odd["non_character_survivors"] == 0 and odd["mismatches"] == 0
    assert even["non_character_survivors"] >= 1
    assert elapsed < 60


def test_criterion_8_norm_to_power_law(report):
    rng = np.random.default_rng(SEED + 8)
    worst = 0.0
    for _ in range(100):
        orders = tuple(int(v) for v in rng.integers(1, 9, size=int(rng.integers(1, 4))))
        G = FiniteAbelianGroup(orders)
        x0 = int(rng.integers(G.order))
        chi = CharFunction(G, G.pairing_values(x0, np.arange(G.order)))
        worst = max(worst, check_power_law(chi, 10).max_violation)
    _, m = phase_split(cubic_phase_gaussian(1.0, 10).char_function())
    boxed = check_power_law(m, 10).max_violation
    ok = worst < 1e-12 and boxed < 1e-12
    report(8, ok, f"100 random characters max violation {worst:.1e}; squared cubic phase {boxed:.1e}")
    assert worst < 1e-12
    assert boxed < 1e-12


def test_criterion_9a_negative_cases(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 9)
    G = parse_group("Z2xZ4")
    reps = [optimality_check(random_distribution(G, rng), 3) for _ in range(20)]
    negatives = sum(not r.condition_b for r in reps)
    discrepancies = sum(not r.equivalent for r in reps)
    elapsed = time.perf_counter() - t0
    ok = negatives == 20 and discrepancies == 0
    report("9a", ok, f"{negatives}/20 random distributions violate the product-equation side, "
                     f"{discrepancies} discrepancies; {elapsed:.1f}s")
    assert negatives == 20
    assert discrepancies == 0


def test_criterion_9b_positive_cases(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 90)
    G = parse_group("Z2xZ4")
    reps = [optimality_check(synthesize_solution(G, 3, rng, positive=True)[0], 3) for _ in range(20)]
    positives = sum(r.condition_b for r in reps)
    real = sum(r.conditional_real for r in reps)
    discrepancies = sum(not r.equivalent for r in reps)
    elapsed = time.perf_counter() - t0
    ok = positives == 20 and discrepancies == 0
    report("9b", ok, f"{positives}/20 synthesized cases meet the product equation with positive n-th power; "
                     f"conditional expectations real in {real}/20 but positive in "
                     f"{sum(r.arg_zero for r in reps)}/20; {discrepancies} discrepancies; {elapsed:.1f}s")
    assert positives == 20
    assert discrepancies == 0


def test_criterion_9c_risk_dominance(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 900)
    G = parse_group("Z2xZ4")
    gs = [random_perturbation(G, 3, rng) for _ in range(50)]
    worst, comparisons = -math.inf, 0
    for _ in range(20):
        mu = synthesize_solution(G, 3, rng, positive=True)[0]
        rep = risk_dominance(mu, 3, gs)
        worst = max(worst, rep.worst_gap)
        comparisons += rep.comparisons
    elapsed = time.perf_counter() - t0
    ok = worst <= 0 and elapsed < 180
    report("9c", ok, f"{comparisons} exact risk comparisons against perturbed sums, worst excess {worst:.1e}; "
                     f"{elapsed:.1f}s")
    assert worst <= 0
    assert elapsed < 180


def test_criterion_10_spectral(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 10)
    inv, conv = 0.0, 0.0
    for _ in range(10):
        while True:
            orders = tuple(int(v) for v in rng.integers(1, 9, size=int(rng.integers(1, 4))))
            if math.prod(orders) <= 64:
                break
        G = FiniteAbelianGroup(orders)
        for _ in range(20):
            mu = SignedMeasure(G, rng.normal(size=G.order))
            nu = SignedMeasure(G, rng.normal(size=G.order))
            f, g = char_function(mu), char_function(nu)
            inv = max(inv, float(np.abs(inverse_transform(f).weights - mu.weights).max()))
            conv = max(conv, float(np.abs(char_function(convolve(mu, nu)).values - f.values * g.values).max()))
    elapsed = time.perf_counter() - t0
    ok = inv < 1e-12 and conv < 1e-12 and elapsed < 10
    report(10, ok, f"200 signed measures: inversion error {inv:.1e}, convolution error {conv:.1e}; {elapsed:.1f}s")
    assert inv < 1e-12
    assert conv < 1e-12
    assert elapsed < 10
