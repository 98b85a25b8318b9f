"""Signed measures on finite Abelian groups and their characteristic functions.

Transforms are direct sums against the pairing matrix (no FFT); the groups of
interest have at most a few thousand elements.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NotASignedMeasure, StructuralError
from .groups import FiniteAbelianGroup, GroupElement, IntegerBox, Subgroup, parse_group

DISTRIBUTION_TOL = 1e-12
VANISHING_TOL = 1e-12
INVERSION_RESIDUE_TOL = 1e-9

# rows of the pairing matrix materialized at once
_CHUNK = 512


@dataclass(frozen=True, eq=False)
class SignedMeasure:
    """Dense real weights over the elements of ``group`` (lexicographic order)."""

    group: FiniteAbelianGroup
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.group.order,):
            raise StructuralError(f"expected {self.group.order} weights for {self.group}, got shape {w.shape}")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def is_distribution(self) -> bool:
        return bool(self.weights.min() >= -DISTRIBUTION_TOL and abs(self.total_mass - 1.0) <= DISTRIBUTION_TOL)

    def support(self) -> list[GroupElement]:
        return [self.group.element(i) for i in np.flatnonzero(self.weights)]

    def __getitem__(self, x: GroupElement) -> float:
        if x.group != self.group:
            raise StructuralError(f"{x} is not in {self.group}")
        return float(self.weights[x.index])

    def to_dict(self) -> dict:
        return {"group": str(self.group), "weights": [float(w) for w in self.weights]}

    @classmethod
    def from_dict(cls, data: dict) -> SignedMeasure:
        return cls(parse_group(data["group"]), np.asarray(data["weights"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> SignedMeasure:
        return cls.from_dict(json.loads(text))


def delta(group: FiniteAbelianGroup, x: GroupElement | int = 0) -> SignedMeasure:
    """Point mass at ``x`` (an element or an index)."""
    i = x.index if isinstance(x, GroupElement) else int(x)
    w = np.zeros(group.order)
    w[i] = 1.0
    return SignedMeasure(group, w)


def uniform(group: FiniteAbelianGroup, on: Subgroup | None = None) -> SignedMeasure:
    """Haar probability of ``group``, or of the subgroup ``on``."""
    w = np.zeros(group.order)
    if on is None:
        w[:] = 1.0 / group.order
    else:
        w[list(on.indices)] = 1.0 / on.order
    return SignedMeasure(group, w)


def supported_on(H: Subgroup, weights) -> SignedMeasure:
    """Measure on ``H.parent`` with ``weights`` placed on ``H``'s elements (sorted order)."""
    w = np.zeros(H.parent.order)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (H.order,):
        raise StructuralError(f"expected {H.order} weights, got {weights.shape}")
    w[list(H.indices)] = weights
    return SignedMeasure(H.parent, w)


@dataclass(frozen=True, eq=False)
class CharFunction:
    """Complex table over the dual index set: a finite group or an integer box."""

    group: FiniteAbelianGroup | IntegerBox
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.group.size,):
            raise StructuralError(f"expected {self.group.size} values for {self.group}, got shape {v.shape}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __call__(self, y: GroupElement) -> complex:
        return complex(self.values[y.index])

    def is_vanishing(self, tol: float = VANISHING_TOL) -> bool:
        return bool(np.abs(self.values).min() < tol)

    def to_dict(self) -> dict:
        return {
            "group": str(self.group),
            "values": [[float(z.real), float(z.imag)] for z in self.values],
        }


def char_function(mu: SignedMeasure) -> CharFunction:
    """``y -> sum_x (x, y) mu(x)``."""
    G = mu.group
    out = np.empty(G.order, dtype=complex)
    for start in range(0, G.order, _CHUNK):
        rows = np.arange(start, min(start + _CHUNK, G.order))
        out[rows] = G.pairing_matrix(rows) @ mu.weights
    return CharFunction(G, out)


def inverse_transform(f: CharFunction, tol: float = INVERSION_RESIDUE_TOL) -> SignedMeasure:
    """Fourier inversion ``x -> |G|^-1 sum_y conj((x, y)) f(y)``.

    Raises :class:`NotASignedMeasure` when the result has an imaginary part of
    at least ``tol`` (``f`` is not conjugate symmetric).
    """
    G = f.group
    if not isinstance(G, FiniteAbelianGroup):
        raise StructuralError("inversion is defined on finite groups only")
    w = np.empty(G.order, dtype=complex)
    for start in range(0, G.order, _CHUNK):
        rows = np.arange(start, min(start + _CHUNK, G.order))
        w[rows] = np.conj(G.pairing_matrix(rows)) @ f.values
    w /= G.order
    residue = float(np.abs(w.imag).max())
    if residue >= tol:
        raise NotASignedMeasure(residue)
    return SignedMeasure(G, w.real)


def _same_group(mu: SignedMeasure, nu: SignedMeasure):
    if mu.group != nu.group:
        raise StructuralError(f"measures live on {mu.group} and {nu.group}")


def convolve(mu: SignedMeasure, nu: SignedMeasure) -> SignedMeasure:
    """``(mu * nu)(x) = sum_t mu(t) nu(x - t)``."""
    _same_group(mu, nu)
    G = mu.group
    idx = np.arange(G.order)
    out = np.zeros(G.order)
    for t in np.flatnonzero(mu.weights):
        out += mu.weights[t] * nu.weights[G.sub(idx, t)]
    return SignedMeasure(G, out)


def reflect(mu: SignedMeasure) -> SignedMeasure:
    """``x -> mu(-x)``."""
    G = mu.group
    return SignedMeasure(G, mu.weights[G.neg(np.arange(G.order))])


def symmetrize(mu: SignedMeasure) -> tuple[SignedMeasure, CharFunction]:
    """``nu = mu * reflect(mu)`` with its (real, nonnegative) transform ``|mu_hat|^2``."""
    nu = convolve(mu, reflect(mu))
    nu_hat = char_function(nu)
    return nu, CharFunction(nu.group, nu_hat.values.real)


def random_distribution(group: FiniteAbelianGroup, rng: np.random.Generator, support: Subgroup | None = None) -> SignedMeasure:
    """Dirichlet(1, ..., 1) draw, optionally restricted to a subgroup."""
    if support is None:
        return SignedMeasure(group, rng.dirichlet(np.ones(group.order)))
    return supported_on(support, rng.dirichlet(np.ones(support.order)))
