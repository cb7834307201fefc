"""Deterministic conic model container and plain-text export.

A :class:`ConicModel` holds a variable registry with bounds, linear rows,
second-order-cone rows (``||members||_2 <= head``) and a linear objective.
It is assembled by the reformulation layer and consumed by the bundled
solver; :meth:`ConicModel.export_text` writes an audit copy with 17
significant digits for external cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ConicModel", "Row", "Cone", "LE", "GE", "EQ"]

LE = "<="
GE = ">="
EQ = "=="

_SENSES = (LE, GE, EQ)


@dataclass
class Row:
    coeffs: dict[str, float]
    sense: str
    rhs: float


@dataclass
class Cone:
    head: str
    members: list[str]


class ConicModel:
    """Mutable while being assembled; treated as immutable afterwards."""

    def __init__(self) -> None:
        self.var_names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self._index: dict[str, int] = {}
        self.rows: list[Row] = []
        self.cones: list[Cone] = []
        self.obj_sense: str = "min"
        self.obj_coeffs: dict[str, float] = {}

    # -- assembly ---------------------------------------------------------

    def add_var(self, name: str, lb: float = -math.inf, ub: float = math.inf) -> str:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        if lb > ub:
            raise ValueError(f"empty bound range for {name!r}: [{lb}, {ub}]")
        self._index[name] = len(self.var_names)
        self.var_names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        return name

    def add_row(self, coeffs: dict[str, float], sense: str, rhs: float) -> Row:
        if sense not in _SENSES:
            raise ValueError(f"unknown row sense {sense!r}")
        for name in coeffs:
            if name not in self._index:
                raise ValueError(f"row references unregistered variable {name!r}")
        row = Row(dict(coeffs), sense, float(rhs))
        self.rows.append(row)
        return row

    def add_cone(self, head: str, members: list[str]) -> Cone:
        for name in [head, *members]:
            if name not in self._index:
                raise ValueError(f"cone references unregistered variable {name!r}")
        cone = Cone(head, list(members))
        self.cones.append(cone)
        return cone

    def set_objective(self, sense: str, coeffs: dict[str, float]) -> None:
        if sense not in ("min", "max"):
            raise ValueError(f"objective sense must be 'min' or 'max', got {sense!r}")
        for name in coeffs:
            if name not in self._index:
                raise ValueError(f"objective references unregistered variable {name!r}")
        self.obj_sense = sense
        self.obj_coeffs = dict(coeffs)

    def replace_rows(self, old: list[Row], new: list[Row]) -> None:
        """Splice ``new`` rows into the position of the first row in ``old``.

        Used when a disutility is (re-)applied to an emitted block; keeps the
        deterministic row order stable.
        """
        if not old:
            self.rows.extend(new)
            return
        ids = {id(r) for r in old}
        pos = next(i for i, r in enumerate(self.rows) if id(r) in ids)
        self.rows = [r for r in self.rows if id(r) not in ids]
        self.rows[pos:pos] = new

    # -- access -----------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    def var_index(self, name: str) -> int:
        return self._index[name]

    def bounds(self, name: str) -> tuple[float, float]:
        i = self._index[name]
        return self.lb[i], self.ub[i]

    def copy(self) -> "ConicModel":
        other = ConicModel()
        other.var_names = list(self.var_names)
        other.lb = list(self.lb)
        other.ub = list(self.ub)
        other._index = dict(self._index)
        other.rows = [Row(dict(r.coeffs), r.sense, r.rhs) for r in self.rows]
        other.cones = [Cone(c.head, list(c.members)) for c in self.cones]
        other.obj_sense = self.obj_sense
        other.obj_coeffs = dict(self.obj_coeffs)
        return other

    def row_arrays(self) -> tuple[np.ndarray, list[str], np.ndarray]:
        """Dense coefficient matrix, senses and right-hand sides."""
        a = np.zeros((len(self.rows), self.n_vars))
        rhs = np.zeros(len(self.rows))
        senses = []
        for i, row in enumerate(self.rows):
            for name, coef in row.coeffs.items():
                a[i, self._index[name]] = coef
            rhs[i] = row.rhs
            senses.append(row.sense)
        return a, senses, rhs

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for name, coef in self.obj_coeffs.items():
            c[self._index[name]] = coef
        return c

    # -- export -----------------------------------------------------------

    def export_text(self) -> str:
        def num(v: float) -> str:
            return f"{v:.17g}"

        def expr(coeffs: dict[str, float]) -> str:
            parts = []
            for name in sorted(coeffs, key=self._index.__getitem__):
                parts.append(f"{num(coeffs[name])} {name}")
            return " + ".join(parts) if parts else "0"

        lines = [f"{self.obj_sense} {expr(self.obj_coeffs)}", "bounds"]
        for name, lo, hi in zip(self.var_names, self.lb, self.ub):
            lines.append(f"  {num(lo)} <= {name} <= {num(hi)}")
        lines.append("rows")
        for row in self.rows:
            lines.append(f"  {expr(row.coeffs)} {row.sense} {num(row.rhs)}")
        lines.append("cones")
        for cone in self.cones:
            lines.append(f"  {cone.head} : " + " ".join(cone.members))
        return "\n".join(lines) + "\n"
