"""KernelTable: sampled kernel values with their rescaling metadata.

CSV columns are ``re_z, im_z, re_w, im_w`` followed by either
``re_k11, im_k11, re_k12, im_k12, re_k21, im_k21, re_k22, im_k22`` for
matrix tables or ``re_k, im_k`` for scalar tables.  Floats are written in
shortest round-trip form (``repr``), at most 17 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

__all__ = ["KernelTable", "format_float"]

_MATRIX_COLS = [
    f"{part}_k{ij}" for ij in ("11", "12", "21", "22") for part in ("re", "im")
]
_SCALAR_COLS = ["re_k", "im_k"]


def format_float(x: float) -> str:
    x = float(x)
    if x == 0.0:
        return "0.0"  # folds -0.0 so reruns agree byte for byte
    return repr(x)


@dataclass
class KernelTable:
    xi: float
    scale: float
    index: float
    grid: list[tuple[complex, complex]]
    values: np.ndarray
    model_id: str
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if len(self.values) != len(self.grid):
            raise ValueError("values and grid must have the same length")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.values.ndim not in (1, 3):
            raise ValueError("values must be scalars or 2x2 matrices")

    @property
    def is_matrix(self) -> bool:
        return self.values.ndim == 3

    def columns(self) -> list[str]:
        return ["re_z", "im_z", "re_w", "im_w"] + (
            _MATRIX_COLS if self.is_matrix else _SCALAR_COLS
        )

    def rows(self) -> list[list[float]]:
        out = []
        for (z, w), v in zip(self.grid, self.values):
            row = [z.real, z.imag, w.real, w.imag]
            entries = v.reshape(-1) if self.is_matrix else [v]
            for e in entries:
                row += [e.real, e.imag]
            out.append(row)
        return out

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns())
        for row in self.rows():
            writer.writerow([format_float(x) for x in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model_id,
            "xi": self.xi,
            "scale": self.scale,
            "index": self.index,
            "kind": "matrix" if self.is_matrix else "scalar",
            "columns": self.columns(),
            "rows": self.rows(),
            "meta": self.meta,
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=1, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "KernelTable":
        rows = np.asarray(data["rows"], dtype=float)
        grid = [(complex(r[0], r[1]), complex(r[2], r[3])) for r in rows]
        vals = rows[:, 4::2] + 1j * rows[:, 5::2]
        if data["kind"] == "matrix":
            vals = vals.reshape(-1, 2, 2)
        else:
            vals = vals[:, 0]
        return cls(
            xi=data["xi"],
            scale=data["scale"],
            index=data["index"],
            grid=grid,
            values=vals,
            model_id=data["model"],
            meta=data.get("meta", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "KernelTable":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_csv(
        cls, text: str, xi: float, scale: float, index: float, model_id: str
    ) -> "KernelTable":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        rows = np.array([[float(x) for x in r] for r in reader])
        grid = [(complex(r[0], r[1]), complex(r[2], r[3])) for r in rows]
        vals = rows[:, 4::2] + 1j * rows[:, 5::2]
        if len(header) == 4 + len(_MATRIX_COLS):
            vals = vals.reshape(-1, 2, 2)
        else:
            vals = vals[:, 0]
        return cls(xi=xi, scale=scale, index=index, grid=grid, values=vals, model_id=model_id)
