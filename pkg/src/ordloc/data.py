"""Two-sample data: ingestion, reduction to an observed pair, and estimate tables."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Sequence

from .calibrate import Calibration
from .estimate import all_estimates
from .family import LocationFamily, ObservationPair, make_family
from .loss import LossSpec

TABLE_KINDS = ("natural", "stein", "b0", "brewster_zidek")
TABLE_HEADERS = ("d_c0", "d_ST", "d_b0", "d_BZ")
REFERENCE_TOL = 0.01


class IngestError(ValueError):
    pass


class Reduction(str, Enum):
    RAW_PAIR = "raw_pair"
    SAMPLE_MINIMUM = "sample_minimum"


@dataclass
class DataSet:
    groups: tuple[list[float], list[float]]
    labels: tuple[str, str]
    reduction: Reduction

    def __post_init__(self):
        if len(self.groups) != 2 or len(self.labels) != 2:
            raise IngestError("a data set has exactly two groups")
        if any(len(g) == 0 for g in self.groups):
            raise IngestError("empty group")
        if self.reduction is Reduction.RAW_PAIR and any(len(g) != 1 for g in self.groups):
            raise IngestError("raw_pair mode needs exactly one value per group")

    @property
    def nonpositive(self) -> list[tuple[str, float]]:
        """Values outside the exponential support, as (label, value)."""
        return [(lab, v) for lab, g in zip(self.labels, self.groups) for v in g if v <= 0]


def _parse_number(text: str, where: str, bad: list[str]) -> float | None:
    try:
        v = float(text)
    except ValueError:
        bad.append(f"{where}: not a number: {text!r}")
        return None
    if not math.isfinite(v):
        bad.append(f"{where}: non-finite value {text!r}")
        return None
    return v


def _reduction_for(groups, reduction) -> Reduction:
    if reduction is not None:
        return Reduction(reduction)
    return Reduction.RAW_PAIR if all(len(g) == 1 for g in groups) else Reduction.SAMPLE_MINIMUM


def _read_csv(path: Path) -> tuple[list[str], list[list[float]]]:
    text = path.read_text()
    if not text.strip():
        raise IngestError(f"{path}: empty file")
    labels: list[str] = []
    groups: dict[str, list[float]] = {}
    bad: list[str] = []
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and [c.strip().lower() for c in row] == ["group", "value"]:
            continue
        if len(row) != 2:
            bad.append(f"line {lineno}: expected 2 fields (group,value), got {len(row)}")
            continue
        label = row[0].strip()
        v = _parse_number(row[1].strip(), f"line {lineno}", bad)
        if not label:
            bad.append(f"line {lineno}: missing group label")
            continue
        if v is None:
            continue
        if label not in groups:
            labels.append(label)
            groups[label] = []
        groups[label].append(v)
    if bad:
        raise IngestError(f"{path}: malformed rows\n  " + "\n  ".join(bad))
    if len(labels) != 2:
        raise IngestError(f"{path}: expected exactly 2 groups, found {len(labels)} ({labels})")
    return labels, [groups[k] for k in labels]


def _read_column(path: Path) -> list[float]:
    text = path.read_text()
    if not text.strip():
        raise IngestError(f"{path}: empty file")
    bad: list[str] = []
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        v = _parse_number(line, f"{path.name} line {lineno}", bad)
        if v is not None:
            out.append(v)
    if bad:
        raise IngestError(f"{path}: malformed rows\n  " + "\n  ".join(bad))
    return out


def ingest(path: str | Path | Sequence[str | Path], format: str = "two_column_csv",
           reduction: str | Reduction | None = None) -> DataSet:
    """Read two groups, preserving their order.

    ``two_column_csv``: rows ``group,value`` (optional header).  ``two_files``:
    ``path`` is a pair of one-number-per-line files.  Without an explicit
    ``reduction``, single values per group mean a raw pair.
    """
    if format == "two_column_csv":
        p = Path(path)
        if not p.is_file():
            raise IngestError(f"{p}: no such file")
        labels, groups = _read_csv(p)
    elif format == "two_files":
        paths = [Path(p) for p in path]
        if len(paths) != 2:
            raise IngestError("two_files format needs exactly two paths")
        for p in paths:
            if not p.is_file():
                raise IngestError(f"{p}: no such file")
        labels = [p.stem for p in paths]
        groups = [_read_column(p) for p in paths]
    else:
        raise IngestError(f"unknown format {format!r}")
    return DataSet((groups[0], groups[1]), (labels[0], labels[1]), _reduction_for(groups, reduction))


def bundled_path(name: str = "jute.csv") -> Path:
    return Path(str(resources.files("ordloc") / "data" / name))


def load_jute() -> DataSet:
    return ingest(bundled_path("jute.csv"))


def load_reference(name: str = "jute_reference.json") -> dict:
    return json.loads(bundled_path(name).read_text())


def reduce(ds: DataSet, family: LocationFamily, sigma_hat: float | None = None
           ) -> tuple[ObservationPair, float]:
    """Observed pair and the scale that goes with it.

    Sample-minimum mode: the minimum of n shifted exponentials with scale
    sigma is a shifted exponential with scale sigma / n.
    """
    sigma_hat = float(family.sigma if sigma_hat is None else sigma_hat)
    if ds.reduction is Reduction.RAW_PAIR:
        return ObservationPair(ds.groups[0][0], ds.groups[1][0]), sigma_hat
    if family.name != "exponential":
        raise IngestError("sample_minimum reduction is only valid for the exponential family")
    n1, n2 = map(len, ds.groups)
    if n1 != n2:
        raise IngestError(f"sample_minimum needs equal group sizes, got {n1} and {n2}")
    if ds.nonpositive:
        raise IngestError(f"non-positive values outside the exponential support: {ds.nonpositive}")
    return ObservationPair(min(ds.groups[0]), min(ds.groups[1])), sigma_hat / n1


@dataclass
class TableRow:
    loss: str
    values: dict[str, float]
    reference: dict[str, float] | None = None

    @property
    def divergences(self) -> dict[str, tuple[float, float]]:
        if not self.reference:
            return {}
        return {k: (v, self.reference[k]) for k, v in self.values.items()
                if k in self.reference and abs(v - self.reference[k]) > REFERENCE_TOL}


@dataclass
class EstimateTable:
    pair: ObservationPair
    sigma_eff: float
    family: str
    rows: list[TableRow]

    def text(self) -> str:
        lines = [f"x1={self.pair.x1:g}  x2={self.pair.x2:g}  u={self.pair.u:.6g}  "
                 f"sigma={self.sigma_eff:.6g}  family={self.family}",
                 f"{'loss':<14}" + "".join(f"{h:>10}" for h in TABLE_HEADERS)]
        for r in self.rows:
            lines.append(f"{r.loss:<14}" + "".join(f"{r.values[k]:>10.2f}" for k in TABLE_KINDS))
        for r in self.rows:
            for k, (ours, ref) in r.divergences.items():
                lines.append(f"NOTE {r.loss} {k}: computed {ours:.4f} differs from reference {ref:g}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "x1": self.pair.x1, "x2": self.pair.x2, "u": self.pair.u,
            "sigma_eff": self.sigma_eff, "family": self.family,
            "rows": [{"loss": r.loss, "values": r.values, "reference": r.reference,
                      "divergences": {k: {"computed": a, "reference": b}
                                      for k, (a, b) in r.divergences.items()}}
                     for r in self.rows],
        }

    def to_json(self) -> str:
        # json writes floats with repr, which round-trips exactly
        return json.dumps(self.to_dict(), indent=2)


def run_estimate_table(pair: ObservationPair, sigma_eff: float, losses: Sequence[LossSpec], *,
                       family: str = "exponential", reference: dict | None = None,
                       **cal_kw) -> EstimateTable:
    """One row per loss with the natural, Stein, b0 and Brewster-Zidek estimates."""
    fam = make_family(family, sigma_eff)
    refs = (reference or {}).get("estimates", {})
    rows = []
    for loss in losses:
        cal = Calibration(fam, loss, **cal_kw)
        est = all_estimates(pair, cal, TABLE_KINDS)
        rows.append(TableRow(loss.label, {k: est[k].value for k in TABLE_KINDS}, refs.get(loss.label)))
    return EstimateTable(pair, sigma_eff, family, rows)
