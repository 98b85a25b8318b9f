"""Finite Abelian groups, integer boxes, pairing, torsion subgroups and cosets.

Elements are addressed by integer *indices* into a fixed enumeration of the
domain; all bulk arithmetic is vectorized over index arrays.  Two domains
share that interface:

``FiniteAbelianGroup``
    ``Z_{n_1} x ... x Z_{n_k}`` enumerated lexicographically (last coordinate
    fastest).  The group is its own dual through the bicharacter
    ``(x, y) = exp(2 pi i sum_j x_j y_j / n_j)``.

``IntegerBox``
    The truncation ``[-M, M]^q`` of ``Z^q``, the dual of the torus ``T^q``.
    Sums leaving the box map to the sentinel index ``size``; tables indexed by
    a box are padded with a trailing NaN so that sentinel lookups propagate.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import StructuralError

# add tables are cached up to this many elements ((N+1)^2 int32 entries)
TABLE_LIMIT = 4096


class _IndexArithmetic:
    """Vectorized index arithmetic on top of ``coords`` / ``_encode``.

    Subclasses provide ``size``, ``coords`` (shape ``(size, k)``) and
    ``_encode`` which maps coordinate arrays to indices, returning ``size``
    for anything outside the domain.
    """

    size: int

    @cached_property
    def _padded_coords(self) -> np.ndarray:
        # sentinel row carries a huge coordinate so that it stays out of range
        pad = np.full((1, self.coords.shape[1]), 1 << 40, dtype=np.int64)
        return np.vstack([self.coords, pad])

    @cached_property
    def _add_table(self) -> np.ndarray | None:
        if self.size > TABLE_LIMIT:
            return None
        idx = np.arange(self.size + 1)
        return self._add_raw(idx[:, None], idx[None, :]).astype(np.int32)

    @cached_property
    def _neg_table(self) -> np.ndarray:
        idx = np.arange(self.size + 1)
        return self._encode(-self._padded_coords[idx], valid=idx < self.size)

    def _add_raw(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b)
        valid = (a < self.size) & (b < self.size)
        return self._encode(self._padded_coords[a] + self._padded_coords[b], valid=valid)

    def add(self, a, b):
        """Index of ``a + b`` (broadcasting)."""
        tab = self._add_table
        if tab is not None:
            return tab[a, b]
        return self._add_raw(a, b)

    def neg(self, a):
        return self._neg_table[a]

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def scale(self, p: int, a):
        """Index of ``p * a`` for an integer ``p`` (negative allowed)."""
        a = np.asarray(a)
        return self._encode(p * self._padded_coords[a], valid=a < self.size)

    def total(self, parts: Sequence) -> np.ndarray:
        return reduce(self.add, parts)

    def label(self, i) -> list[int]:
        """Coordinates of index ``i`` as a plain list (for reports)."""
        return [int(c) for c in self.coords[int(i)]]

    def padded(self, values: np.ndarray) -> np.ndarray:
        """``values`` with a trailing NaN so sentinel lookups yield NaN."""
        values = np.asarray(values)
        return np.concatenate([values, np.full(1, np.nan, dtype=values.dtype)])


@dataclass(frozen=True)
class FiniteAbelianGroup(_IndexArithmetic):
    """``Z_{n_1} x ... x Z_{n_k}``; serves as both X and its dual Y."""

    orders: tuple[int, ...]

    def __post_init__(self):
        orders = tuple(int(n) for n in self.orders)
        if not orders or any(n < 1 for n in orders):
            raise StructuralError(f"cyclic orders must be >= 1, got {self.orders!r}")
        object.__setattr__(self, "orders", orders)

    def __str__(self):
        return "x".join(f"Z{n}" for n in self.orders)

    @property
    def order(self) -> int:
        return math.prod(self.orders)

    @property
    def size(self) -> int:
        return self.order

    @cached_property
    def strides(self) -> np.ndarray:
        out = np.ones(len(self.orders), dtype=np.int64)
        for i in range(len(self.orders) - 2, -1, -1):
            out[i] = out[i + 1] * self.orders[i + 1]
        return out

    @cached_property
    def coords(self) -> np.ndarray:
        grids = np.indices(self.orders).reshape(len(self.orders), -1).T
        return np.ascontiguousarray(grids, dtype=np.int64)

    @cached_property
    def exponent(self) -> int:
        return reduce(math.lcm, self.orders, 1)

    def _encode(self, coords, valid=None):
        coords = np.asarray(coords, dtype=np.int64)
        idx = (np.mod(coords, self.orders) * self.strides).sum(axis=-1)
        if valid is not None:
            idx = np.where(valid, idx, self.size)
        return idx

    def index_of(self, coords: Iterable[int]) -> int:
        coords = tuple(coords)
        if len(coords) != len(self.orders):
            raise StructuralError(f"{coords!r} has wrong length for {self}")
        return int(self._encode(np.array(coords)))

    @property
    def zero_index(self) -> int:
        return 0

    def element(self, i: int) -> GroupElement:
        return GroupElement(self, tuple(self.label(i)))

    def elements(self) -> list[GroupElement]:
        return [self.element(i) for i in range(self.order)]

    @property
    def zero(self) -> GroupElement:
        return self.element(0)

    def pairing_exponents(self, x, y) -> np.ndarray:
        """Integer ``k`` with ``(x, y) = exp(2 pi i k / exponent)`` (broadcasting)."""
        weights = self.exponent // np.asarray(self.orders, dtype=np.int64)
        cx = self.coords[np.asarray(x)]
        cy = self.coords[np.asarray(y)]
        return np.mod((cx * cy * weights).sum(axis=-1), self.exponent)

    @cached_property
    def _roots(self) -> np.ndarray:
        k = np.arange(self.exponent)
        return np.exp(2j * np.pi * k / self.exponent)

    def pairing_values(self, x, y) -> np.ndarray:
        return self._roots[self.pairing_exponents(x, y)]

    def pairing_matrix(self, rows=None) -> np.ndarray:
        """``P[r, x] = (x, y_r)`` for the dual elements ``rows`` (default: all)."""
        rows = np.arange(self.order) if rows is None else np.asarray(rows)
        return self.pairing_values(rows[:, None], np.arange(self.order)[None, :])

    @cached_property
    def doubled_mask(self) -> np.ndarray:
        """Membership mask of ``2G``."""
        mask = np.zeros(self.order, dtype=bool)
        mask[self.scale(2, np.arange(self.order))] = True
        return mask

    @cached_property
    def two_torsion_mask(self) -> np.ndarray:
        return self.scale(2, np.arange(self.order)) == 0


@dataclass(frozen=True)
class GroupElement:
    """An element of a ``FiniteAbelianGroup``; coordinates are stored reduced."""

    group: FiniteAbelianGroup
    coords: tuple[int, ...]

    def __post_init__(self):
        coords = tuple(int(c) for c in self.coords)
        if len(coords) != len(self.group.orders):
            raise StructuralError(f"{coords!r} has wrong length for {self.group}")
        object.__setattr__(self, "coords", tuple(c % n for c, n in zip(coords, self.group.orders)))

    def _check(self, other: GroupElement):
        if not isinstance(other, GroupElement) or other.group != self.group:
            raise StructuralError(f"cannot combine elements of {self.group} and {getattr(other, 'group', other)}")

    def __add__(self, other: GroupElement) -> GroupElement:
        self._check(other)
        return GroupElement(self.group, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> GroupElement:
        return GroupElement(self.group, tuple(-a for a in self.coords))

    def __sub__(self, other: GroupElement) -> GroupElement:
        return self + (-other)

    def __mul__(self, p: int) -> GroupElement:
        if not isinstance(p, (int, np.integer)):
            return NotImplemented
        return GroupElement(self.group, tuple(int(p) * a for a in self.coords))

    __rmul__ = __mul__

    @property
    def index(self) -> int:
        return self.group.index_of(self.coords)

    def is_zero(self) -> bool:
        return not any(self.coords)

    def __repr__(self):
        return f"GroupElement({self.group}, {self.coords})"


def add(a: GroupElement, b: GroupElement) -> GroupElement:
    return a + b


def negate(a: GroupElement) -> GroupElement:
    return -a


def scalar_mul(p: int, a: GroupElement) -> GroupElement:
    return int(p) * a


def pairing(x: GroupElement, y: GroupElement) -> complex:
    """Value of the character ``y`` at ``x``."""
    x._check(y)
    return complex(x.group.pairing_values(x.index, y.index))


_SPEC_RE = re.compile(r"^z(\d+)$", re.IGNORECASE)


def parse_group(spec: str) -> FiniteAbelianGroup:
    """Parse ``"Z4xZ2xZ3"`` (case-insensitive, ``x``-separated)."""
    parts = re.split(r"[xX]", spec.strip())
    orders = []
    for part in parts:
        m = _SPEC_RE.match(part.strip())
        if not m:
            raise StructuralError(f"bad group specification {spec!r}")
        orders.append(int(m.group(1)))
    return FiniteAbelianGroup(tuple(orders))


@dataclass(frozen=True)
class Subgroup:
    """Explicitly enumerated subgroup; ``indices`` are sorted element indices."""

    parent: FiniteAbelianGroup
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "indices", tuple(int(i) for i in idx))
        G = self.parent
        if not len(idx) or idx[0] != 0:
            raise StructuralError("subgroup must contain zero")
        if idx[-1] >= G.order:
            raise StructuralError("index out of range")
        mask = np.zeros(G.order, dtype=bool)
        mask[idx] = True
        if not mask[G.neg(idx)].all() or not mask[G.add(idx[:, None], idx[None, :])].all():
            raise StructuralError("set is not closed under addition and negation")

    @classmethod
    def from_mask(cls, parent: FiniteAbelianGroup, mask) -> Subgroup:
        return cls(parent, tuple(np.flatnonzero(mask)))

    @classmethod
    def from_elements(cls, parent: FiniteAbelianGroup, elements: Iterable[GroupElement | Sequence[int]]) -> Subgroup:
        idx = []
        for e in elements:
            if isinstance(e, GroupElement):
                if e.group != parent:
                    raise StructuralError(f"{e} is not in {parent}")
                idx.append(e.index)
            else:
                idx.append(parent.index_of(e))
        return cls(parent, tuple(idx))

    @cached_property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.parent.order, dtype=bool)
        m[list(self.indices)] = True
        return m

    @property
    def order(self) -> int:
        return len(self.indices)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, x: GroupElement) -> bool:
        return x.group == self.parent and bool(self.mask[x.index])

    @property
    def elements(self) -> list[GroupElement]:
        return [self.parent.element(i) for i in self.indices]


def torsion_subgroups(G: FiniteAbelianGroup) -> tuple[Subgroup, Subgroup]:
    """Kernel and image of ``x -> 2x``."""
    return Subgroup.from_mask(G, G.two_torsion_mask), Subgroup.from_mask(G, G.doubled_mask)


@dataclass(frozen=True)
class CosetDecomposition:
    """Cosets of ``subgroup``; ``labels[i]`` is the coset number of element ``i``.

    Representatives are the lexicographically least member of each coset,
    listed in order of first appearance, so the zero coset comes first.
    """

    subgroup: Subgroup
    representatives: tuple[GroupElement, ...]
    labels: np.ndarray = field(repr=False, compare=False)

    def __len__(self):
        return len(self.representatives)


def cosets_mod(G: FiniteAbelianGroup, H: Subgroup) -> CosetDecomposition:
    if H.parent != G:
        raise StructuralError(f"subgroup lives in {H.parent}, not {G}")
    labels = np.full(G.order, -1, dtype=np.int64)
    reps = []
    members = np.asarray(H.indices)
    for i in range(G.order):
        if labels[i] >= 0:
            continue
        labels[G.add(i, members)] = len(reps)
        reps.append(G.element(i))
    return CosetDecomposition(H, tuple(reps), labels)


def annihilator(G: FiniteAbelianGroup, H: Subgroup) -> Subgroup:
    """``{y : (h, y) = 1 for all h in H}`` as a subgroup of the dual."""
    if H.parent != G:
        raise StructuralError(f"subgroup lives in {H.parent}, not {G}")
    k = G.pairing_exponents(np.asarray(H.indices)[:, None], np.arange(G.order)[None, :])
    return Subgroup.from_mask(G, (k == 0).all(axis=0))


def _centered_positions(M: int) -> np.ndarray:
    # 0, 1, -1, 2, -2, ..., M, -M
    out = [0]
    for m in range(1, M + 1):
        out += [m, -m]
    return np.array(out, dtype=np.int64)


@dataclass(frozen=True)
class IntegerBox(_IndexArithmetic):
    """The box ``[-M, M]^q`` inside ``Z^q``.

    Per axis the enumeration runs ``0, 1, -1, 2, -2, ...`` so that
    lexicographically first witnesses are the smallest offending frequencies.
    """

    q: int
    M: int

    def __post_init__(self):
        if self.q < 1 or self.M < 0:
            raise StructuralError(f"bad box q={self.q}, M={self.M}")

    def __str__(self):
        return f"Box(q={self.q}, M={self.M})"

    @property
    def width(self) -> int:
        return 2 * self.M + 1

    @property
    def size(self) -> int:
        return self.width ** self.q

    @cached_property
    def coords(self) -> np.ndarray:
        axis = _centered_positions(self.M)
        grids = np.indices((self.width,) * self.q).reshape(self.q, -1).T
        return np.ascontiguousarray(axis[grids])

    @cached_property
    def _strides(self) -> np.ndarray:
        return self.width ** np.arange(self.q - 1, -1, -1, dtype=np.int64)

    def _encode(self, coords, valid=None):
        c = np.asarray(coords, dtype=np.int64)
        inside = (np.abs(c) <= self.M).all(axis=-1)
        pos = np.where(c > 0, 2 * c - 1, -2 * c)
        idx = (np.where(np.abs(c) <= self.M, pos, 0) * self._strides).sum(axis=-1)
        if valid is not None:
            inside = inside & valid
        return np.where(inside, idx, self.size)

    def index_of(self, coords: Iterable[int]) -> int:
        i = int(self._encode(np.array(tuple(coords))))
        if i == self.size:
            raise StructuralError(f"{tuple(coords)} outside {self}")
        return i

    @property
    def zero_index(self) -> int:
        return 0

    @cached_property
    def doubled_mask(self) -> np.ndarray:
        """Members of ``2 Z^q`` inside the box."""
        return (self.coords % 2 == 0).all(axis=1)

    def within(self, bound: int) -> np.ndarray:
        """Indices with every coordinate bounded by ``bound`` in absolute value."""
        return np.flatnonzero((np.abs(self.coords) <= bound).all(axis=1))

    @cached_property
    def natural_order(self) -> np.ndarray:
        """Permutation taking box order to C-order over ``(-M..M)^q``."""
        nat = ((self.coords + self.M) * self._strides).sum(axis=1)
        perm = np.empty(self.size, dtype=np.int64)
        perm[nat] = np.arange(self.size)
        return perm

    def dense(self, values: np.ndarray) -> np.ndarray:
        """Reshape a box table into an ``(2M+1,)*q`` array indexed from ``-M``."""
        return np.asarray(values)[self.natural_order].reshape((self.width,) * self.q)

    @cached_property
    def parity_group(self) -> FiniteAbelianGroup:
        """``Z^q / 2Z^q`` written as ``Z_2^q``."""
        return FiniteAbelianGroup((2,) * self.q)

    @cached_property
    def parity_index(self) -> np.ndarray:
        """Index in ``parity_group`` of each box element's class mod 2."""
        return self.parity_group._encode(self.coords % 2)
