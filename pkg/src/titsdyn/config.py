"""Tunable constants.

Contraction and proximality estimates hold for some constants depending only
on the field; the values below are conservative defaults, and every
certificate records the ones it was produced with.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path


@dataclass(frozen=True)
class DynamicsConstants:
    """(c1, c2, C) for one field family."""

    c1: float
    c2: float
    C: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Config:
    eta: float = 1e-9
    archimedean: DynamicsConstants = field(default_factory=lambda: DynamicsConstants(100.0, 100.0, 10.0))
    # None means p**2 for each of c1, c2, C
    padic: DynamicsConstants | None = None
    fixed_point_budget: int = 10_000
    # growth classification
    r2_threshold: float = 0.98
    slope_threshold: float = 0.05
    bounded_fraction: float = 1 / 3
    fit_fraction: float = 1 / 2
    frontier_cap: int = 2_000_000
    # searches
    oracle_budget: int = 1_000_000
    separation_threshold: float = 1e-4

    def constants(self, field_desc) -> DynamicsConstants:
        if field_desc.kind == "padic":
            if self.padic is not None:
                return self.padic
            q = float(field_desc.p) ** 2
            return DynamicsConstants(q, q, q)
        return self.archimedean

    def tolerance(self) -> float:
        return max(1e3 * self.eta, 1e-12)

    def with_constants(self, c1: float, c2: float | None = None, C: float | None = None) -> "Config":
        base = self.archimedean
        return replace(self, archimedean=DynamicsConstants(c1, c2 if c2 is not None else base.c2,
                                                           C if C is not None else base.C))

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        data = dict(data)
        if "archimedean" in data and isinstance(data["archimedean"], dict):
            data["archimedean"] = DynamicsConstants(**data["archimedean"])
        if data.get("padic") is not None and isinstance(data["padic"], dict):
            data["padic"] = DynamicsConstants(**data["padic"])
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        return cls.from_dict(json.loads(Path(path).read_text()))


DEFAULT = Config()
