import csv
import json
import math

import numpy as np
import pytest

from groupchar.decompose import coset_residual_split, psi_from_char
from groupchar.errors import ConstraintViolated
from groupchar.funceq import DualFunction, check_parallelogram, check_product_equation, character_test
from groupchar.decompose import phase_split
from groupchar.groups import IntegerBox
from groupchar.torus import (TorusModel, admissible_tilts, cubic_phase_gaussian, density_min, gaussian_tail,
                             parity_tilted_gaussian, parity_tilted_product, smallest_positive_width,
                             wrapped_gaussian, write_density_csv)


def test_wrapped_gaussian():
    model = wrapped_gaussian(1.0, 0.0, 10)
    assert model.is_conjugate_symmetric() and np.abs(model.coeffs.imag).max() == 0
    assert density_min(model, 256).certified
    assert model.tail_bound == gaussian_tail(1.0, 10)
    psi = psi_from_char(model.char_function())
    assert check_parallelogram(psi).max_violation < 1e-12
    flat = wrapped_gaussian(50.0, 0.0, 4)
    _, rho = flat.density_grid(64)
    assert np.abs(rho - 1).max() < 1e-20
    with pytest.raises(ValueError):
        wrapped_gaussian(0.0)


def test_shifted_gaussian_density_peaks_at_shift():
    model = wrapped_gaussian(0.5, 1.0, 10)
    t, rho = model.density_grid(1024)
    # rho(t) = sum f(m) e^{-imt} peaks where m t0 - m t vanishes
    assert abs(t[np.argmax(rho)] - 1.0) < 2 * np.pi / 1024


def test_gaussian_tail_majorizes():
    for sigma, M in [(1.0, 3), (0.3, 5), (2.0, 2)]:
        exact = 2 * sum(math.exp(-sigma * m * m) for m in range(M + 1, M + 200))
        assert exact <= gaussian_tail(sigma, M)


def test_dirichlet_comb_is_not_positive():
    box = IntegerBox(1, 2)
    model = TorusModel(1, 2, np.ones(box.size), 0.0)
    cert = density_min(model, 64)
    assert cert.min_value < 0 and not cert.certified


def test_density_grid_requires_resolution():
    with pytest.raises(ValueError):
        density_min(wrapped_gaussian(1.0, M=10), 39)


def test_parity_tilted_gaussian():
    model = parity_tilted_gaussian(0.1, 10)
    assert density_min(model, 2048).certified
    assert model.expected["residual_odd"] == -0.1
    zero = parity_tilted_gaussian(0.0, 10)
    assert np.allclose(zero.coeffs, wrapped_gaussian(1.0, 0.0, 10).coeffs, rtol=1e-15, atol=0)
    phi, res = coset_residual_split(psi_from_char(zero.char_function()))
    assert set(res.values()) == {0.0}


def test_parity_tilted_product():
    model = parity_tilted_product(2, [4, 5], 8)
    bound = (1 + 2 * math.exp(1 - 4)) * (1 + 2 * math.exp(2 - 5))
    assert model.coefficient_sum_bound() < 2
    assert abs(model.coefficient_sum_bound() - bound) < 1e-3
    assert density_min(model, 256).certified
    assert check_product_equation(model.char_function(), 3, arg_bound=3, relative=True).max_violation < 1e-12
    with pytest.raises(ConstraintViolated):
        parity_tilted_product(2, [1, 1], 8)
    one = parity_tilted_product(1, [4.0], 8)
    assert np.allclose(one.coeffs / parity_tilted_gaussian(1.0, 8).coeffs,
                       np.exp(-3 * one.box.coords[:, 0] ** 2))


def test_parity_models_factorize_exactly():
    for model in (parity_tilted_gaussian(0.2, 10), parity_tilted_product(2, [4, 5], 6)):
        phi, res = coset_residual_split(psi_from_char(model.char_function()), tol=1e-12)
        assert phi.values.max() > 0


def test_cubic_phase_model():
    model = cubic_phase_gaussian(2.0, 10)
    assert model.is_conjugate_symmetric()
    assert density_min(model, 2048).certified
    f = model.char_function()
    assert check_product_equation(f, 4, relative=True).max_violation < 1e-12
    l, m = phase_split(f)
    assert character_test(m) is not None
    with pytest.raises(Exception):
        character_test(l)


def test_scans():
    rep = smallest_positive_width([0.5, 1.0, 1.5], 10, 2048)
    assert rep["a"] == 1.0 and not rep["scanned"][0]["certified"]
    rep = admissible_tilts([0.0, 0.1, 0.2], 10, 1024)
    assert rep["largest_certified"] == 0.2


def test_serialization(tmp_path):
    model = parity_tilted_product(2, [4, 5], 4)
    back = TorusModel.from_dict(json.loads(json.dumps(model.to_dict())))
    assert np.array_equal(back.coeffs, model.coeffs) and back.tail_bound == model.tail_bound
    path = write_density_csv(model, 16, tmp_path / "d.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t_1", "t_2", "rho"] and len(rows) == 1 + 16 * 16
    _, rho = model.density_grid(16)
    assert float(rows[1][2]) == rho[0, 0]


def test_density_matches_pointwise_evaluation():
    model = cubic_phase_gaussian(1.0, 6)
    t, rho = model.density_grid(64)
    assert np.abs(model.density(t[:, None]) - rho).max() < 1e-12
