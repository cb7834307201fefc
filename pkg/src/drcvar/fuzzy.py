"""Fuzzy intervals interpreted as possibility distributions.

A fuzzy interval ``<a, lo, hi>_{z1-z2}`` gives possibility 1 to the nominal
value ``a`` and decays to 0 at the support endpoints ``a - lo`` and
``a + hi`` along power-shaped branches.  A deviation interval ``<0, d>_z``
plays the same role for the norm distance of a scenario from the nominal
scenario.

Convention used throughout: the membership branches carry the exponent
``1/z`` while the level-cut bounds carry ``lam**z``.  The two are inverses
of each other, so ``membership(x) >= lam`` holds exactly when ``x`` lies in
``cut(lam)`` (see the property tests).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FuzzyInterval", "DeviationInterval"]


def _check_level(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"cut level must lie in [0, 1], got {lam!r}")


@dataclass(frozen=True)
class FuzzyInterval:
    """Possibility distribution of a single uncertain coefficient."""

    nominal: float
    dev_lo: float
    dev_hi: float
    shape_lo: float = 1.0
    shape_hi: float = 1.0

    def __post_init__(self) -> None:
        if self.dev_lo < 0 or self.dev_hi < 0:
            raise ValueError("deviations must be nonnegative")
        if self.shape_lo <= 0 or self.shape_hi <= 0:
            raise ValueError("shape exponents must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return (self.nominal - self.dev_lo, self.nominal + self.dev_hi)

    def membership(self, x):
        """Possibility degree of value(s) ``x``; total, vectorized."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        # np.where evaluates both branches, so points far outside a tiny
        # deviation can overflow harmlessly before being masked out
        with np.errstate(over="ignore"):
            return self._membership(x, out)

    def _membership(self, x, out):
        if self.dev_lo > 0:
            left = (x >= self.nominal - self.dev_lo) & (x < self.nominal)
            out = np.where(
                left,
                np.power(
                    np.clip(1.0 + (x - self.nominal) / self.dev_lo, 0.0, 1.0),
                    1.0 / self.shape_lo,
                ),
                out,
            )
        if self.dev_hi > 0:
            right = (x > self.nominal) & (x <= self.nominal + self.dev_hi)
            out = np.where(
                right,
                np.power(
                    np.clip(1.0 + (self.nominal - x) / self.dev_hi, 0.0, 1.0),
                    1.0 / self.shape_hi,
                ),
                out,
            )
        out = np.where(x == self.nominal, 1.0, out)
        return float(out) if out.ndim == 0 else out

    def cut(self, lam: float) -> tuple[float, float]:
        """Level cut ``[lower(lam), upper(lam)]``; ``cut(1)`` is the nominal
        point, ``cut(0)`` the full support."""
        _check_level(lam)
        return (
            self.nominal - self.dev_lo * (1.0 - lam**self.shape_lo),
            self.nominal + self.dev_hi * (1.0 - lam**self.shape_hi),
        )

    def scale(self, factor: float) -> "FuzzyInterval":
        """Fuzzy interval of ``factor * x``; a negative factor mirrors the
        branches (used to fold uncertain right-hand sides into a row)."""
        if factor >= 0:
            return FuzzyInterval(
                factor * self.nominal,
                factor * self.dev_lo,
                factor * self.dev_hi,
                self.shape_lo,
                self.shape_hi,
            )
        return FuzzyInterval(
            factor * self.nominal,
            -factor * self.dev_hi,
            -factor * self.dev_lo,
            self.shape_hi,
            self.shape_lo,
        )


@dataclass(frozen=True)
class DeviationInterval:
    """Possibility distribution of the deviation budget variable."""

    budget: float
    shape: float = 1.0

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if self.shape <= 0:
            raise ValueError("shape exponent must be positive")

    def membership(self, x):
        x = np.asarray(x, dtype=float)
        if self.budget == 0:
            out = np.where(x == 0.0, 1.0, 0.0)
        else:
            inside = (x >= 0.0) & (x <= self.budget)
            out = np.where(
                inside,
                np.power(np.clip(1.0 - x / self.budget, 0.0, 1.0), 1.0 / self.shape),
                0.0,
            )
        return float(out) if out.ndim == 0 else out

    def cut(self, lam: float) -> float:
        """Radius of the deviation ball at level ``lam``."""
        _check_level(lam)
        return self.budget * (1.0 - lam**self.shape)
