"""Affine lower bounds ``lin_p(nu) = slope * nu + intercept`` on the key entropy."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources


@dataclass(frozen=True)
class AffineEntropyBound:
    """Affine bound in the CHSH value ``nu``; ``intercept`` is the coefficient at ``nu = 0``."""

    slope: float
    intercept: float
    p: float
    certified: bool = True
    source: str = "computed"

    def at_nu(self, nu: float) -> float:
        return self.slope * nu + self.intercept

    def at_w(self, w: float) -> float:
        """Evaluate at win probability ``w`` via ``nu = 8w - 4``."""
        return self.at_nu(8.0 * w - 4.0)

    __call__ = at_w

    @property
    def value_at_2(self) -> float:
        """Bound at the classical CHSH value ``nu = 2``."""
        return self.at_nu(2.0)


def affine_bound(lam: float, c: float, p: float, certified: bool = True,
                 source: str = "computed") -> AffineEntropyBound:
    """Bound ``lam * (nu - 2) + c``, i.e. ``c`` is its value at ``nu = 2``."""
    return AffineEntropyBound(float(lam), float(c) - 2.0 * float(lam), float(p), certified, source)


def from_c_lambda(lam: float, c_lambda: float, p: float, certified: bool = True) -> AffineEntropyBound:
    """Bound from a multiplier and a (lower bound on the) dual value ``c_lambda``."""
    return AffineEntropyBound(float(lam), float(c_lambda), float(p), certified, "computed")


def paper_bounds() -> dict:
    """Built-in reference coefficients keyed by ``p``."""
    text = resources.files("diqkd").joinpath("data/paper_bounds.json").read_text()
    out = {}
    for rec in json.loads(text)["bounds"]:
        out[rec["p"]] = affine_bound(rec["slope"], rec["value_at_2"], rec["p"], True, rec["source"])
    return out


def paper_bound(p: float) -> AffineEntropyBound:
    table = paper_bounds()
    for key, bound in table.items():
        if abs(key - p) < 1e-12:
            return bound
    raise KeyError(f"no built-in bound for p={p}; available: {sorted(table)}")
