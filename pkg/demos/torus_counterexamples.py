"""Walk through the three torus models that solve the product equation yet escape the finite-group picture."""
from groupchar.decompose import decompose_full, diagnostic
from groupchar.funceq import check_product_equation
from groupchar.torus import (cubic_phase_gaussian, density_min, parity_tilted_gaussian, parity_tilted_product,
                             smallest_positive_width)


def circle():
    model = parity_tilted_gaussian(0.1, 10)
    cert = density_min(model, 2048)
    eq = check_product_equation(model.char_function(), 3, arg_bound=3)
    res = decompose_full(model, 3)
    print("parity-tilted circle, eps = 0.1")
    print(f"  density min {cert.min_value:.4f} (certified {cert.certified})")
    print(f"  product equation, n = 3: max violation {eq.max_violation:.1e}")
    print(f"  signed factor weights {res.pi.weights}, a distribution: {res.pi_is_distribution}")


def torus():
    model = parity_tilted_product(2, [4, 5], 8)
    cert = density_min(model, 256)
    res = decompose_full(model, 3, arg_bound=3)
    print("parity-tilted 2-torus, a = (4, 5)")
    print(f"  coefficient sum {model.coefficient_sum_bound():.4f}, density certified {cert.certified}")
    for k, v in res.residuals.items():
        print(f"  residual at parity class {k.coords}: {v:+.6f}")


def cubic():
    scan = smallest_positive_width([0.5 * k for k in range(1, 11)], 10, 2048)
    model = cubic_phase_gaussian(scan["a"], 10)
    eq = check_product_equation(model.char_function(), 4)
    print(f"cubic phase, smallest certified width a = {scan['a']}")
    print(f"  product equation, n = 4: max violation {eq.max_violation:.1e}")
    try:
        decompose_full(model, 4)
    except Exception as exc:
        d = diagnostic(exc)
        print(f"  decomposition stops at stage '{d['stage']}': {d['message']}")


if __name__ == "__main__":
    circle()
    torus()
    cubic()
