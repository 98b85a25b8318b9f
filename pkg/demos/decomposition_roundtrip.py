"""Synthesize a solution on Z2xZ4, factor it, and rebuild the original distribution from the factors."""
import numpy as np

from groupchar.decompose import decompose_full, synthesize_solution
from groupchar.funceq import check_product_equation
from groupchar.groups import parse_group
from groupchar.spectral import char_function

rng = np.random.default_rng(7)
G = parse_group("Z2xZ4")
mu, x, pi = synthesize_solution(G, 3, rng)
f = char_function(mu)
print(f"shift used to build mu: {x}")
print(f"product equation, n = 3: {check_product_equation(f, 3).max_violation:.1e}")
res = decompose_full(f, 3)
print(f"recovered shift {res.shift}, signed factor is a distribution: {res.pi_is_distribution}")
print(f"recovered factor weights  {np.round(res.pi.weights, 6)}")
print(f"factor used in synthesis  {np.round(pi.weights, 6)}")
