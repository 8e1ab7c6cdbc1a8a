"""Per-instance bound tables, serialized as JSON lines and CSV."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable

REPORT_SCHEMA = "fermitree.bounds/1"


@dataclass
class BoundReport:
    tree: list
    n_per_vertex: list[int]
    contracted_legs: int
    perturbative: float | None = None
    standard: float | None = None
    theorem1: float | None = None
    theorem2: float | None = None
    loop: float | None = None
    amplitude: float | None = None
    kernel: float | None = None
    alpha_coupling: float | None = None
    branches: int | None = None
    c_constant: float | None = None
    volume: float | None = None
    status: str = "bound-only"
    extra: dict = field(default_factory=dict)

    def violations(self) -> list[str]:
        """Names of bounds that fall below the computed amplitude."""
        out = []
        if self.amplitude is not None:
            for name in ("theorem1", "theorem2", "loop"):
                b = getattr(self, name)
                if b is not None and b < self.amplitude:
                    out.append(name)
        if self.kernel is not None and self.standard is not None and self.standard < self.kernel:
            out.append("standard")
        return out

    def finalize(self) -> BoundReport:
        if self.amplitude is None and self.kernel is None:
            self.status = "bound-only"
        else:
            self.status = "violation" if self.violations() else "ok"
        return self

    def to_dict(self) -> dict:
        d = {"schema": REPORT_SCHEMA}
        d.update(asdict(self))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str | dict) -> BoundReport:
        data = json.loads(text) if isinstance(text, str) else dict(text)
        if data.pop("schema", REPORT_SCHEMA) != REPORT_SCHEMA:
            raise ValueError("unknown report schema")
        return cls(**data)


CSV_FIELDS = [f.name for f in fields(BoundReport) if f.name != "extra"]


def reports_to_csv(reports: Iterable[BoundReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        row = {k: v for k, v in asdict(r).items() if k in CSV_FIELDS}
        row["tree"] = json.dumps(row["tree"])
        row["n_per_vertex"] = json.dumps(row["n_per_vertex"])
        writer.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v)) for k, v in row.items()})
    return buf.getvalue()
