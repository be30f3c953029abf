"""Persistence diagrams in untilted (birth, death) and tilted (birth, persistence) form."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

ESSENTIAL = math.inf

EssentialPolicy = Union[str, float]


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of (birth, death, dim) features.

    Essential classes carry ``death = inf``. ``max_value`` is the largest
    filtration value of the complex the diagram came from; it is what the
    ``"cap"`` essential policy closes essential classes at.
    """

    births: np.ndarray
    deaths: np.ndarray
    dims: np.ndarray
    max_value: float = math.nan

    def __post_init__(self):
        b = np.asarray(self.births, dtype=float).reshape(-1)
        d = np.asarray(self.deaths, dtype=float).reshape(-1)
        k = np.asarray(self.dims, dtype=int).reshape(-1)
        if not (b.shape == d.shape == k.shape):
            raise ValueError("births, deaths and dims must have equal length")
        finite = np.isfinite(d)
        if np.any(d[finite] < b[finite]):
            raise ValueError("death precedes birth")
        object.__setattr__(self, "births", b)
        object.__setattr__(self, "deaths", d)
        object.__setattr__(self, "dims", k)

    @classmethod
    def empty(cls, max_value: float = math.nan) -> "PersistenceDiagram":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0, dtype=int), max_value)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]], dim: int = 0, max_value: float = math.nan):
        """Build a diagram from ``(birth, death)`` or ``(birth, death, dim)`` tuples."""
        rows = [tuple(p) for p in pairs]
        if not rows:
            return cls.empty(max_value)
        births = [r[0] for r in rows]
        deaths = [r[1] for r in rows]
        dims = [r[2] if len(r) > 2 else dim for r in rows]
        return cls(np.array(births, float), np.array(deaths, float), np.array(dims, int), max_value)

    def __len__(self) -> int:
        return self.births.size

    @property
    def persistence(self) -> np.ndarray:
        return self.deaths - self.births

    def in_dim(self, dim: int) -> "PersistenceDiagram":
        keep = self.dims == dim
        return PersistenceDiagram(self.births[keep], self.deaths[keep], self.dims[keep], self.max_value)

    def finite(self) -> "PersistenceDiagram":
        keep = np.isfinite(self.deaths)
        return PersistenceDiagram(self.births[keep], self.deaths[keep], self.dims[keep], self.max_value)

    def essential(self) -> "PersistenceDiagram":
        keep = ~np.isfinite(self.deaths)
        return PersistenceDiagram(self.births[keep], self.deaths[keep], self.dims[keep], self.max_value)

    def points(self, dim: int | None = None) -> np.ndarray:
        """(k, 2) array of (birth, death); restricted to ``dim`` when given."""
        d = self if dim is None else self.in_dim(dim)
        return np.column_stack([d.births, d.deaths]) if len(d) else np.zeros((0, 2))

    def sorted(self) -> "PersistenceDiagram":
        order = np.lexsort((self.deaths, self.births, self.dims))
        return PersistenceDiagram(self.births[order], self.deaths[order], self.dims[order], self.max_value)

    def to_records(self) -> list[dict]:
        return [
            {"birth": float(b), "death": "inf" if not math.isfinite(d) else float(d), "dim": int(k)}
            for b, d, k in zip(self.births, self.deaths, self.dims)
        ]

    @classmethod
    def from_records(cls, records: Iterable[dict], max_value: float = math.nan) -> "PersistenceDiagram":
        rows = []
        for r in records:
            death = r["death"]
            death = math.inf if death in ("inf", None) else float(death)
            rows.append((float(r["birth"]), death, int(r["dim"])))
        return cls.from_pairs(rows, max_value=max_value)

    def to_json(self) -> str:
        return json.dumps(self.to_records())

    @classmethod
    def from_json(cls, text: str) -> "PersistenceDiagram":
        return cls.from_records(json.loads(text))


@dataclass(frozen=True)
class TiltedDiagram:
    """Features as (birth, persistence, dim); persistence is strictly positive."""

    births: np.ndarray
    persistence: np.ndarray
    dims: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        b = np.asarray(self.births, dtype=float).reshape(-1)
        p = np.asarray(self.persistence, dtype=float).reshape(-1)
        k = np.asarray(self.dims, dtype=int).reshape(-1)
        if k.size == 0 and b.size:
            k = np.zeros(b.size, dtype=int)
        if not (b.shape == p.shape == k.shape):
            raise ValueError("births, persistence and dims must have equal length")
        object.__setattr__(self, "births", b)
        object.__setattr__(self, "persistence", p)
        object.__setattr__(self, "dims", k)

    def __len__(self) -> int:
        return self.births.size

    def in_dim(self, dim: int) -> "TiltedDiagram":
        keep = self.dims == dim
        return TiltedDiagram(self.births[keep], self.persistence[keep], self.dims[keep])

    def points(self, dim: int | None = None) -> np.ndarray:
        d = self if dim is None else self.in_dim(dim)
        return np.column_stack([d.births, d.persistence]) if len(d) else np.zeros((0, 2))

    def scaled(self, c: float) -> "TiltedDiagram":
        return TiltedDiagram(self.births, self.persistence * c, self.dims)


def tilt(diagram: PersistenceDiagram, essential: EssentialPolicy = "drop") -> TiltedDiagram:
    """Map (birth, death) to (birth, death - birth).

    ``essential`` is ``"drop"``, ``"cap"`` (close essential classes at the
    diagram's ``max_value``) or a number to cap at.
    """
    finite = np.isfinite(diagram.deaths)
    births = diagram.births[finite]
    pers = diagram.deaths[finite] - births
    dims = diagram.dims[finite]
    if essential != "drop" and not np.all(finite):
        cap = diagram.max_value if essential == "cap" else float(essential)
        if not math.isfinite(cap):
            raise ValueError("cap value must be finite")
        eb = diagram.births[~finite]
        if np.any(eb > cap):
            raise ValueError(f"cap {cap} is below an essential birth {eb.max()}")
        births = np.concatenate([births, eb])
        pers = np.concatenate([pers, cap - eb])
        dims = np.concatenate([dims, diagram.dims[~finite]])
    keep = pers > 0
    return TiltedDiagram(births[keep], pers[keep], dims[keep])


def same_multiset(a: PersistenceDiagram, b: PersistenceDiagram, atol: float = 0.0) -> bool:
    """True when the two diagrams hold the same features (sorted comparison)."""
    if len(a) != len(b):
        return False
    a, b = a.sorted(), b.sorted()
    if not np.array_equal(a.dims, b.dims):
        return False
    ea, eb = np.isinf(a.deaths), np.isinf(b.deaths)
    if not np.array_equal(ea, eb):
        return False
    return bool(
        np.allclose(a.births, b.births, rtol=0, atol=atol)
        and np.allclose(a.deaths[~ea], b.deaths[~eb], rtol=0, atol=atol)
    )
