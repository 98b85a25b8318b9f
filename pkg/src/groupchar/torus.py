"""Truncated Fourier models of distributions on the torus ``T^q``.

A model stores the coefficients ``f(m)`` on the box ``[-M, M]^q`` together
with a bound on the neglected mass ``sum_{m outside box} |f(m)|``.  The density
is ``rho(t) = sum_m f(m) exp(-i m.t)`` with respect to normalized Haar
measure, so ``f(0) = 1`` for probability distributions.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConstraintViolated
from .groups import IntegerBox
from .spectral import CharFunction


def gaussian_tail(sigma: float, M: int) -> float:
    """Geometric majorant of ``sum_{|m| > M} exp(-sigma m^2)``."""
    return 2 * math.exp(-sigma * M * M) / (1 - math.exp(-sigma * (2 * M + 1)))


@dataclass(eq=False)
class TorusModel:
    q: int
    M: int
    coeffs: np.ndarray = field(repr=False)
    tail_bound: float = 0.0
    name: str = ""
    params: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.box.size,):
            raise ValueError(f"expected {self.box.size} coefficients, got {self.coeffs.shape}")

    @property
    def box(self) -> IntegerBox:
        return IntegerBox(self.q, self.M)

    def char_function(self) -> CharFunction:
        return CharFunction(self.box, self.coeffs)

    def coefficient(self, m: Sequence[int] | int) -> complex:
        m = (m,) if isinstance(m, (int, np.integer)) else tuple(m)
        return complex(self.coeffs[self.box.index_of(m)])

    def is_conjugate_symmetric(self, tol: float = 1e-12) -> bool:
        neg = self.box.neg(np.arange(self.box.size))
        return bool(np.max(np.abs(self.coeffs[neg] - np.conj(self.coeffs))) <= tol)

    def coefficient_sum_bound(self) -> float:
        """Upper bound on ``sum_m |f(m)|`` over all of ``Z^q``."""
        return float(np.abs(self.coeffs).sum() + self.tail_bound)

    def density_grid(self, grid_points: int) -> tuple[np.ndarray, np.ndarray]:
        """Partial Fourier sum on the uniform grid ``2 pi j / grid_points``.

        Returns the axis points and a real array of shape ``(grid_points,)*q``.
        """
        t = 2 * np.pi * np.arange(grid_points) / grid_points
        m = np.arange(-self.M, self.M + 1)
        E = np.exp(-1j * np.outer(t, m))
        out = self.box.dense(self.coeffs)
        for axis in range(self.q):
            out = np.moveaxis(np.tensordot(E, out, axes=([1], [axis])), 0, axis)
        return t, out

    def density(self, points) -> np.ndarray:
        """Partial Fourier sum at arbitrary points of shape ``(P, q)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        phase = np.exp(-1j * points @ self.box.coords.T)
        return (phase @ self.coeffs).real

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "q": self.q,
            "M": self.M,
            "params": self.params,
            "expected": self.expected,
            "tail_bound": self.tail_bound,
            "frequencies": self.box.coords.tolist(),
            "coeffs": [[float(z.real), float(z.imag)] for z in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> TorusModel:
        q, M = int(data["q"]), int(data["M"])
        box = IntegerBox(q, M)
        coeffs = np.zeros(box.size, dtype=complex)
        for m, (re, im) in zip(data["frequencies"], data["coeffs"]):
            coeffs[box.index_of(m)] = complex(re, im)
        return cls(q, M, coeffs, float(data.get("tail_bound", 0.0)), data.get("name", ""),
                   dict(data.get("params", {})), dict(data.get("expected", {})))


@dataclass
class DensityCertificate:
    min_value: float
    argmin: tuple[float, ...]
    tail_bound: float
    lipschitz_slack: float
    grid_points: int
    max_imag: float

    @property
    def margin(self) -> float:
        return self.min_value - self.tail_bound - self.lipschitz_slack

    @property
    def certified(self) -> bool:
        return self.margin > 0

    def to_dict(self) -> dict:
        return {
            "min_value": self.min_value,
            "argmin": list(self.argmin),
            "tail_bound": self.tail_bound,
            "lipschitz_slack": self.lipschitz_slack,
            "margin": self.margin,
            "certified": self.certified,
            "grid_points": self.grid_points,
        }


def density_min(model: TorusModel, grid_points: int) -> DensityCertificate:
    """Grid minimum of the density with a positivity certificate.

    The certificate subtracts the tail bound and a Lipschitz slack
    ``sum_m |f(m)| |m|_1 h / 2`` (``h`` the grid spacing) from the grid minimum.
    """
    if grid_points < 4 * model.M:
        raise ValueError(f"grid_points must be >= 4M = {4 * model.M}")
    t, rho = model.density_grid(grid_points)
    values = rho.real
    pos = np.unravel_index(np.argmin(values), values.shape)
    h = 2 * np.pi / grid_points
    l1 = np.abs(model.box.coords).sum(axis=1)
    slack = float((np.abs(model.coeffs) * l1).sum() * h / 2)
    return DensityCertificate(
        min_value=float(values[pos]),
        argmin=tuple(float(t[i]) for i in pos),
        tail_bound=model.tail_bound,
        lipschitz_slack=slack,
        grid_points=grid_points,
        max_imag=float(np.abs(rho.imag).max()),
    )


def write_density_csv(model: TorusModel, grid_points: int, path) -> Path:
    """Write ``t_1, ..., t_q, rho`` rows for the uniform grid."""
    t, rho = model.density_grid(grid_points)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"t_{i + 1}" for i in range(model.q)] + ["rho"])
        for pos in np.ndindex(rho.shape):
            w.writerow([repr(float(t[i])) for i in pos] + [repr(float(rho[pos].real))])
    return path


# -- model families ----------------------------------------------------------

def wrapped_gaussian(sigma: float, t0: float = 0.0, M: int = 10) -> TorusModel:
    """Gaussian on the circle: ``f(m) = exp(i m t0 - sigma m^2)``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    box = IntegerBox(1, M)
    m = box.coords[:, 0]
    coeffs = np.exp(1j * m * t0 - sigma * m * m)
    return TorusModel(1, M, coeffs, gaussian_tail(sigma, M), "wrapped_gaussian",
                      {"sigma": sigma, "t0": t0}, {"quadratic": sigma})


def parity_tilted_gaussian(eps: float, M: int = 10) -> TorusModel:
    """``f(m) = exp(-m^2)`` on even ``m`` and ``exp(-m^2 + eps)`` on odd ``m``.

    Positive for small ``eps``, solves the product equation for every ``n``, yet
    its coset factor ``(1, e^eps)`` inverts to a signed two-point measure.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    box = IntegerBox(1, M)
    m = box.coords[:, 0]
    coeffs = np.exp(-(m * m) + eps * (m % 2)).astype(complex)
    pi_weights = [(1 + math.exp(eps)) / 2, (1 - math.exp(eps)) / 2]
    return TorusModel(1, M, coeffs, math.exp(eps) * gaussian_tail(1.0, M), "remark2",
                      {"eps": eps}, {"quadratic": 1.0, "residual_odd": -eps, "pi_weights": pi_weights})


def parity_tilted_product(l: int, a: Sequence[float], M: int = 8) -> TorusModel:
    """Product over ``l`` coordinates of ``exp(-a_k m^2 + k [m odd])``.

    Raises :class:`ConstraintViolated` unless the total coefficient sum is below 2,
    which makes every nonzero frequency together weigh less than the constant term.
    """
    a = [float(v) for v in a]
    if len(a) != l or l < 1:
        raise ValueError("need one width per coordinate")
    if min(a) <= 0:
        raise ValueError("widths must be positive")
    box = IntegerBox(l, M)
    c = box.coords
    k = np.arange(1, l + 1)
    log_f = (-(np.asarray(a) * c * c) + k * (c % 2)).sum(axis=1)
    coeffs = np.exp(log_f).astype(complex)
    axis = np.arange(-M, M + 1)
    inside = [np.exp(-a[j] * axis ** 2 + (j + 1) * (axis % 2)).sum() for j in range(l)]
    tails = [math.exp(j + 1) * gaussian_tail(a[j], M) for j in range(l)]
    # prod(S + T) - prod(S) <= sum_k T_k prod_{j != k} (S_j + T_j), without cancellation
    full = [s + t for s, t in zip(inside, tails)]
    tail = float(sum(tails[j] * math.prod(full[:j] + full[j + 1:]) for j in range(l)))
    model = TorusModel(l, M, coeffs, tail, "remark4", {"l": l, "a": a},
                       {"quadratic_diagonal": a, "residuals_per_coordinate": [-(j + 1) for j in range(l)]})
    total = model.coefficient_sum_bound()
    model.expected["coefficient_sum_bound"] = total
    if total >= 2:
        raise ConstraintViolated(f"coefficient sum {total:.6f} >= 2; increase the widths a_k")
    return model


def cubic_phase_gaussian(a: float, M: int = 10) -> TorusModel:
    """``f(m) = exp(-a m^2 + i pi m^3 / 2)``; ``f^4 > 0`` but the phase is no character."""
    if a <= 0:
        raise ValueError("a must be positive")
    box = IntegerBox(1, M)
    m = box.coords[:, 0].astype(float)
    coeffs = np.exp(-a * m * m + 1j * np.pi * m ** 3 / 2)
    return TorusModel(1, M, coeffs, gaussian_tail(a, M), "remark5", {"a": a}, {"n": 4})


GALLERY = {
    "remark2": parity_tilted_gaussian,
    "remark4": parity_tilted_product,
    "remark5": cubic_phase_gaussian,
}


def smallest_positive_width(a_grid: Sequence[float], M: int = 10, grid_points: int = 2048) -> dict:
    """First ``a`` on ``a_grid`` for which the cubic-phase density is certified positive."""
    scanned = []
    for a in a_grid:
        cert = density_min(cubic_phase_gaussian(a, M), grid_points)
        scanned.append({"a": float(a), "min_value": cert.min_value, "certified": cert.certified})
        if cert.certified:
            return {"a": float(a), "scanned": scanned}
    return {"a": None, "scanned": scanned}


def admissible_tilts(eps_grid: Sequence[float], M: int = 10, grid_points: int = 2048) -> dict:
    """Certified positivity of the parity-tilted Gaussian along ``eps_grid``.

    Reports the largest grid value below the first failure; no claim is made
    about the exact threshold.
    """
    scanned = []
    largest = None
    for eps in eps_grid:
        cert = density_min(parity_tilted_gaussian(eps, M), grid_points)
        scanned.append({"eps": float(eps), "min_value": cert.min_value, "certified": cert.certified})
        if not cert.certified:
            break
        largest = float(eps)
    return {"largest_certified": largest, "scanned": scanned}
