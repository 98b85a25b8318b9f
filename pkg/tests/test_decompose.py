import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from groupchar.decompose import (CHAIN_STEPS, bezout_pair, bruteforce_theorem_oracle, coset_residual_split,
                                 decompose_full, diagnostic, phase_split, pi_from_residuals, psi_from_char,
                                 resynthesize, run_proof_chain, shift_from_phase, synthesize_solution)
from groupchar.errors import HypothesisViolated, NotASolution, NotDecomposable, VanishingCharFunction
from groupchar.funceq import DualFunction, check_norm_equation, check_power_law
from groupchar.groups import GroupElement, parse_group, torsion_subgroups
from groupchar.spectral import CharFunction, char_function, convolve, delta, supported_on, uniform
from groupchar.torus import cubic_phase_gaussian, parity_tilted_gaussian

Z4 = parse_group("Z4")
Z2Z4 = parse_group("Z2xZ4")


def test_psi_conventions():
    assert not psi_from_char(CharFunction(Z4, np.ones(4))).values.any()
    f = char_function(supported_on(torsion_subgroups(Z4)[0], [.75, .25]))
    assert np.allclose(psi_from_char(f, "full").values, 2 * psi_from_char(f, "half").values)
    psi = psi_from_char(parity_tilted_gaussian(0.1, 10).char_function())
    m = psi.group.coords[:, 0]
    assert np.abs(psi.values - (m * m - 0.1 * (m % 2))).max() < 1e-12
    with pytest.raises(VanishingCharFunction):
        psi_from_char(char_function(uniform(Z4)))
    with pytest.raises(ValueError):
        psi_from_char(CharFunction(Z4, np.ones(4)), "quarter")


def test_box_vanishing_threshold_is_underflow_only():
    # e^{-100} at the box edge is a genuine coefficient
    psi = psi_from_char(parity_tilted_gaussian(0.0, 10).char_function())
    assert abs(psi.values.max() - 100) < 1e-9


def test_proof_chain_examples(rng):
    rep = run_proof_chain(DualFunction(Z4, np.zeros(4)), 3)
    assert rep.passed and tuple(rep.steps) == CHAIN_STEPS
    mu, _, _ = synthesize_solution(Z2Z4, 3, rng)
    rep = run_proof_chain(psi_from_char(char_function(mu), "full"), 3)
    assert rep.passed and max(r.max_violation for r in rep.steps.values()) < 1e-9
    Z8 = parse_group("Z8")
    v = rng.normal(size=8)
    v = v + v[Z8.neg(np.arange(8))]
    rep = run_proof_chain(DualFunction(Z8, v - v[0]), 3)
    assert rep.first_failure == "three_point"
    assert not rep.to_dict()["passed"]


def test_coset_residual_examples():
    phi, res = coset_residual_split(DualFunction(Z4, np.zeros(4)))
    assert not phi.values.any() and set(res.values()) == {0.0}
    phi, res = coset_residual_split(DualFunction(Z4, [0, .3, 0, .3]))
    assert {r.coords: v for r, v in res.items()} == {(0,): 0.0, (1,): .3}
    with pytest.raises(NotDecomposable):
        coset_residual_split(DualFunction(Z4, [0, .3, 0, .4]))
    psi = psi_from_char(parity_tilted_gaussian(0.1, 10).char_function())
    phi, res = coset_residual_split(psi)
    m = phi.group.coords[:, 0]
    assert np.abs(phi.values - m * m).max() < 1e-12
    assert abs(res[GroupElement(phi.group.parity_group, (1,))] + 0.1) < 1e-12


def test_pi_from_residuals_examples():
    Z2 = parse_group("Z2")
    assert np.allclose(pi_from_residuals({Z2.element(0): 0.0, Z2.element(1): 0.0}, Z2).weights, [1, 0])
    pi = pi_from_residuals({Z2.element(0): 0.0, Z2.element(1): -0.1}, Z2)
    e = math.exp(0.1)
    assert np.abs(pi.weights - [(1 + e) / 2, (1 - e) / 2]).max() < 1e-12 and not pi.is_distribution
    pi = pi_from_residuals({Z4.element(0): 0.0, Z4.element(1): math.log(2)}, Z4)
    assert np.abs(pi.weights - [.75, 0, .25, 0]).max() < 1e-12
    pi = pi_from_residuals({Z4.element(0): 0.0, Z4.element(1): -math.log(2)}, Z4)
    assert np.abs(pi.weights - [1.5, 0, -.5, 0]).max() < 1e-12
    assert abs(pi.total_mass - 1) < 1e-12


def test_phase_split_examples():
    l, m = phase_split(CharFunction(Z4, [1, .5, .2, .5]))
    assert np.allclose(l.values, 1) and np.allclose(m.values, 1)
    chi = Z4.pairing_values(3, np.arange(4))
    l, _ = phase_split(CharFunction(Z4, chi * [1, .5, .2, .5]))
    assert np.abs(l.values - chi).max() < 1e-12
    f = cubic_phase_gaussian(1.0, 10).char_function()
    l, m = phase_split(f)
    k = f.group.coords[:, 0].astype(float)
    assert np.abs(l.values - np.exp(1j * np.pi * k ** 3 / 2)).max() < 1e-12
    assert np.abs(m.values - (-1.0) ** k).max() < 1e-12


def test_bezout_and_shift():
    for n in (3, 5, 7, 9):
        r, s = bezout_pair(n)
        assert 2 * r + n * s == 1 and s in (-1, 1)
    assert bezout_pair(5) == (-2, 1)
    assert shift_from_phase(CharFunction(Z4, np.ones(4)), 3).is_zero
    with pytest.raises(HypothesisViolated):
        shift_from_phase(CharFunction(Z4, Z4.pairing_values(2, np.arange(4))), 3)
    Z5 = parse_group("Z5")
    assert shift_from_phase(CharFunction(Z5, Z5.pairing_values(3, np.arange(5))), 5).coords == (3,)


def test_decompose_examples():
    K, _ = torsion_subgroups(Z2Z4)
    pi0 = supported_on(K, [.4, .2, .2, .2])
    mu = convolve(delta(Z2Z4, Z2Z4.index_of((0, 2))), pi0)
    res = decompose_full(mu, 3)
    assert res.resynthesis_error < 1e-9 and res.pi_is_distribution
    assert Z2Z4.scale(6, res.shift.index) == 0
    assert res.to_dict()["pi"]["group"] == "Z2xZ4"
    with pytest.raises(NotASolution) as info:
        decompose_full(delta(Z4, 1), 3)
    assert diagnostic(info.value)["stage"] == "equation"
    # uniform on the 2-torsion subgroup has a vanishing transform, outside the nonvanishing hypothesis
    with pytest.raises(VanishingCharFunction) as info:
        decompose_full(uniform(Z2Z4, K), 3)
    assert diagnostic(info.value)["stage"] == "psi"


def test_decompose_torus_models():
    res = decompose_full(parity_tilted_gaussian(0.1, 10), 3)
    assert res.path == "odd_power" and not res.pi_is_distribution
    assert abs(res.pi.weights[1] - (1 - math.exp(0.1)) / 2) < 1e-12
    with pytest.raises(Exception) as info:
        decompose_full(cubic_phase_gaussian(1.0, 10), 4)
    d = diagnostic(info.value)
    assert d["stage"] == "phase" and d["reason"] == "NotACharacter"


@settings(max_examples=40)
@given(st.sampled_from(["Z2xZ4", "Z2xZ2xZ3", "Z4", "Z6", "Z2xZ2", "Z8"]), st.sampled_from([3, 5]),
       st.integers(0, 2**32))
def test_roundtrip(spec, n, seed):
    G = parse_group(spec)
    mu, x, pi = synthesize_solution(G, n, np.random.default_rng(seed))
    res = decompose_full(mu, n)
    assert res.resynthesis_error < 1e-9
    assert res.pi_is_distribution
    assert abs(res.pi.total_mass - 1) < 1e-12
    assert G.scale(2 * n, res.shift.index) == 0
    synth = resynthesize(G, res.shift, res.quadratic, res.pi)
    assert np.abs(synth - char_function(mu).values).max() < 1e-9


@settings(max_examples=40)
@given(st.sampled_from(["Z2xZ4", "Z6", "Z2xZ2xZ3"]), st.integers(0, 2**32))
def test_phase_consistency(spec, seed):
    G = parse_group(spec)
    mu, _, _ = synthesize_solution(G, 3, np.random.default_rng(seed), positive=True)
    _, m = phase_split(char_function(mu))
    assert check_norm_equation(m).max_violation < 1e-9
    assert check_power_law(m, 10).max_violation < 1e-9


@pytest.mark.parametrize("spec", ["Z2", "Z3", "Z4", "Z5", "Z6", "Z7", "Z8", "Z2xZ2", "Z2xZ4", "Z2xZ2xZ2"])
def test_oracle_equivalence_small_groups(spec):
    G = parse_group(spec)
    rep = bruteforce_theorem_oracle(G, 3, 6)
    assert rep["mismatch_count"] == 0
    assert rep["pi_is_distribution"] == rep["decomposed"] == rep["shift_annihilated_by_2n"]


def test_oracle_examples():
    rep = bruteforce_theorem_oracle(parse_group("Z3"), 3, 6)
    assert rep["solving"] == rep["point_masses_among_solving"] == 3
    rep = bruteforce_theorem_oracle(parse_group("Z2xZ2"), 3, 4)
    assert rep["solving"] == rep["nonvanishing"]
