"""Monomial function families and their incremental frontiers.

Variables are 1-based: ``z1 .. zd``. ``frontier(j)`` lists the members
that involve ``z_j`` and no later variable; it is exactly the batch that
gets orthogonalized when the ``j``-th variable is substituted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Monomial",
    "FunctionFamily",
    "FamilyError",
    "build",
    "parse_family",
    "evaluate",
    "evaluate_many",
]

KINDS = ("singletons", "multilinear", "poly", "custom")


class FamilyError(ValueError):
    """Invalid family definition or query."""


@dataclass(frozen=True)
class Monomial:
    """A product of powers of symbolic variables.

    Parameters
    ----------
    exponents : tuple of (int, int)
        Sorted ``(variable, power)`` pairs with 1-based variables and
        positive powers. Empty for the constant monomial.
    """

    exponents: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        merged: dict[int, int] = {}
        for var, power in self.exponents:
            if var < 1 or power < 1:
                raise FamilyError(f"bad factor z{var}^{power}")
            merged[var] = merged.get(var, 0) + power
        object.__setattr__(self, "exponents", tuple(sorted(merged.items())))

    @classmethod
    def of(cls, *variables: int) -> "Monomial":
        """Monomial from a multiset of variables, e.g. ``of(1, 1, 2)`` is z1^2 z2."""
        return cls(tuple((v, 1) for v in variables))

    @property
    def degree(self) -> int:
        return sum(p for _, p in self.exponents)

    @property
    def max_var(self) -> int:
        return self.exponents[-1][0] if self.exponents else 0

    @property
    def is_multilinear(self) -> bool:
        return all(p == 1 for _, p in self.exponents)

    @property
    def variables(self) -> tuple[int, ...]:
        """Variables repeated by multiplicity, ascending."""
        return tuple(v for v, p in self.exponents for _ in range(p))

    def sort_key(self) -> tuple:
        """Graded lexicographic key: degree first, then the variable tuple."""
        return (self.degree, self.variables)

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.exponents + other.exponents)

    def __str__(self) -> str:
        if not self.exponents:
            return "1"
        return "*".join(f"z{v}" if p == 1 else f"z{v}^{p}" for v, p in self.exponents)

    def to_list(self) -> list[list[int]]:
        return [[v, p] for v, p in self.exponents]

    @classmethod
    def from_list(cls, data: Iterable[Sequence[int]]) -> "Monomial":
        return cls(tuple((int(v), int(p)) for v, p in data))


CONSTANT = Monomial()


@dataclass(frozen=True)
class FunctionFamily:
    """An ordered family of monomials in ``d`` variables.

    Use :func:`build` or :func:`parse_family` rather than the constructor.
    """

    kind: str
    d: int
    max_degree: int | None = None
    include_constant: bool = True
    custom: tuple[Monomial, ...] = field(default=(), repr=False)

    @cached_property
    def _frontiers(self) -> dict[int, tuple[Monomial, ...]]:
        return {}

    def frontier(self, j: int) -> list[Monomial]:
        """Members with ``max_var == j``, headed by ``z_j``.

        The remaining members follow graded lexicographic order.
        """
        if not 1 <= j <= self.d:
            raise FamilyError(f"frontier index {j} outside 1..{self.d}")
        cache = self._frontiers
        if j not in cache:
            cache[j] = tuple(self._make_frontier(j))
        return list(cache[j])

    def _make_frontier(self, j: int) -> list[Monomial]:
        if self.kind == "singletons":
            return [Monomial.of(j)]
        if self.kind == "multilinear":
            out = [
                Monomial.of(*rest, j)
                for k in range(self.max_degree)
                for rest in itertools.combinations(range(1, j), k)
            ]
        elif self.kind == "poly":
            out = [
                Monomial.of(*rest, j)
                for k in range(self.max_degree)
                for rest in itertools.combinations_with_replacement(range(1, j + 1), k)
            ]
        else:
            out = [m for m in self.custom if m.max_var == j]
        out.sort(key=Monomial.sort_key)
        return out

    @property
    def constant(self) -> Monomial | None:
        return CONSTANT if self.include_constant else None

    def members(self) -> list[Monomial]:
        """The whole family: constant (if any) followed by frontiers 1..d."""
        out = [CONSTANT] if self.include_constant else []
        for j in range(1, self.d + 1):
            out.extend(self.frontier(j))
        return out

    def size(self, j: int | None = None) -> int:
        """Number of members over the first ``j`` variables (default all)."""
        j = self.d if j is None else j
        base = 1 if self.include_constant else 0
        if self.kind == "singletons":
            return j
        if self.kind == "multilinear":
            return base + sum(comb(j, i) for i in range(1, self.max_degree + 1))
        if self.kind == "poly":
            return comb(j + self.max_degree, self.max_degree) - 1 + base
        return base + sum(len(self.frontier(i)) for i in range(1, j + 1))

    @property
    def spec(self) -> str:
        """CLI string form (custom families are not representable)."""
        if self.kind == "singletons":
            return "singletons"
        if self.kind in ("multilinear", "poly"):
            return f"{self.kind}:{self.max_degree}"
        return "custom"

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "d": self.d, "max_degree": self.max_degree,
               "include_constant": self.include_constant}
        if self.kind == "custom":
            out["monomials"] = [m.to_list() for m in self.custom]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FunctionFamily":
        monomials = [Monomial.from_list(m) for m in data.get("monomials", [])]
        return build(data["kind"], data["d"], data.get("max_degree"),
                     include_constant=data.get("include_constant", True),
                     monomials=monomials or None)


def build(
    kind: str,
    d: int,
    max_degree: int | None = None,
    *,
    include_constant: bool = True,
    monomials: Sequence[Monomial] | None = None,
) -> FunctionFamily:
    """Construct a family.

    Parameters
    ----------
    kind : {"singletons", "multilinear", "poly", "custom"}
        ``singletons`` is ``{z1..zd}`` and never carries the constant.
    d : int
        Number of symbolic variables.
    max_degree : int, optional
        Required for ``multilinear`` and ``poly``.
    include_constant : bool
        Prepend the constant monomial ``1``.
    monomials : sequence of Monomial, optional
        Members of a ``custom`` family; must contain every singleton.
    """
    if kind not in KINDS:
        raise FamilyError(f"unknown family kind {kind!r}")
    if d < 1:
        raise FamilyError("d must be at least 1")
    if kind == "singletons":
        return FunctionFamily("singletons", d, 1, include_constant=False)
    if kind in ("multilinear", "poly"):
        if max_degree is None or int(max_degree) < 1:
            raise FamilyError(f"{kind} needs max_degree >= 1, got {max_degree}")
        return FunctionFamily(kind, d, int(max_degree), include_constant=include_constant)

    members = [m for m in (monomials or ()) if m.degree > 0]
    if len(set(members)) != len(members):
        raise FamilyError("custom family has duplicate monomials")
    if any(m.max_var > d for m in members):
        raise FamilyError(f"custom monomial references a variable beyond z{d}")
    missing = {Monomial.of(i) for i in range(1, d + 1)} - set(members)
    if missing:
        raise FamilyError(
            "custom family must contain every singleton; missing "
            + ", ".join(sorted(map(str, missing)))
        )
    top = max(m.degree for m in members)
    return FunctionFamily("custom", d, top, include_constant, tuple(members))


def parse_family(spec: str, d: int, *, include_constant: bool = True) -> FunctionFamily:
    """Parse ``"singletons"``, ``"multilinear:L"`` or ``"poly:L"``."""
    name, _, degree = spec.strip().partition(":")
    if name == "singletons" and not degree:
        return build("singletons", d)
    if name in ("multilinear", "poly") and degree:
        try:
            level = int(degree)
        except ValueError:
            raise FamilyError(f"bad degree in family spec {spec!r}") from None
        return build(name, d, level, include_constant=include_constant)
    raise FamilyError(f"bad family spec {spec!r}")


def evaluate(m: Monomial, Z: np.ndarray) -> np.ndarray:
    """Evaluate a monomial row-wise on substituted columns ``Z[:, 0] = z1, ...``."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise FamilyError("Z must be 2-D")
    if m.max_var > Z.shape[1]:
        raise FamilyError(f"{m} needs {m.max_var} variables, got {Z.shape[1]}")
    out = np.ones(Z.shape[0])
    for var, power in m.exponents:
        col = Z[:, var - 1]
        out = out * (col if power == 1 else col**power)
    return out


def evaluate_many(monomials: Sequence[Monomial], Z: np.ndarray) -> np.ndarray:
    """Stack :func:`evaluate` over several monomials into an ``N x K`` matrix."""
    Z = np.asarray(Z, dtype=float)
    out = np.empty((Z.shape[0], len(monomials)))
    for k, m in enumerate(monomials):
        out[:, k] = evaluate(m, Z)
    return out
