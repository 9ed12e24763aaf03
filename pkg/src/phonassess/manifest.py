"""Cohort manifest loading and validation.

CSV header: subject_id,group,sex,age,duration,updrs3,updrs4,rbdsq,fog,nmss,
bdi,mmse,acer,led followed by one column per (vowel, task) recording named
path_<vowel>_<task>. Empty cells are missing values and stay missing.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .audio import TASKS, VOWELS
from .errors import ManifestError
from .evaluation import SCALES

GROUPS = ("PD", "HC")
SCORE_COLUMNS = ("duration", "updrs3", "updrs4", "rbdsq", "fog", "nmss",
                 "bdi", "mmse", "acer", "led")


@dataclass
class SubjectRow:
    subject_id: str
    group: str
    sex: str
    age: float | None
    scores: dict[str, float | None]
    recordings: dict[tuple[str, str], Path] = field(default_factory=dict)


@dataclass
class CohortManifest:
    rows: list[SubjectRow]
    path: Path | None = None

    def group_counts(self) -> dict[str, int]:
        counts = {g: 0 for g in GROUPS}
        for row in self.rows:
            counts[row.group] += 1
        return counts

    def score_names(self) -> tuple[str, ...]:
        return SCORE_COLUMNS

    def tasks_present(self) -> list[str]:
        seen = {t for row in self.rows for (_, t) in row.recordings}
        return [t for t in TASKS if t in seen]

    def pairs_present(self) -> list[tuple[str, str]]:
        seen = {vt for row in self.rows for vt in row.recordings}
        return [(v, t) for v in VOWELS for t in TASKS if (v, t) in seen]

    def subject(self, subject_id: str) -> SubjectRow:
        for row in self.rows:
            if row.subject_id == subject_id:
                return row
        raise KeyError(subject_id)


def _parse_score(name: str, cell: str, subject_id: str) -> float | None:
    cell = cell.strip()
    if not cell:
        return None
    try:
        value = float(cell)
    except ValueError as exc:
        raise ManifestError(f"{subject_id}: {name}={cell!r} is not a number") from exc
    scale = SCALES[name]
    if value < scale.theoretical_min or (scale.bounded and value > scale.theoretical_max):
        hi = scale.theoretical_max if scale.bounded else "inf"
        raise ManifestError(
            f"{subject_id}: {name}={value} outside theoretical range "
            f"[{scale.theoretical_min}, {hi}]"
        )
    return value


def load_manifest(path) -> CohortManifest:
    """Read and validate a cohort manifest CSV.

    Raises ManifestError on duplicate subject ids, unknown group labels, or
    clinical scores outside their scale's theoretical range. Recording paths
    are resolved relative to the manifest's directory.
    """
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"no such manifest: {path}")
    base = path.parent
    rows: list[SubjectRow] = []
    seen_ids: set[str] = set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "subject_id" not in reader.fieldnames:
            raise ManifestError(f"{path}: missing header with subject_id column")
        path_cols = [c for c in reader.fieldnames if c.startswith("path_")]
        for rec in reader:
            sid = (rec.get("subject_id") or "").strip()
            if not sid:
                raise ManifestError(f"{path}: row with empty subject_id")
            if sid in seen_ids:
                raise ManifestError(f"duplicate subject_id {sid!r}")
            seen_ids.add(sid)
            group = (rec.get("group") or "").strip()
            if group not in GROUPS:
                raise ManifestError(f"{sid}: unknown group label {group!r} (expect PD or HC)")
            age_cell = (rec.get("age") or "").strip()
            age = float(age_cell) if age_cell else None
            scores = {name: _parse_score(name, rec.get(name) or "", sid) for name in SCORE_COLUMNS}
            recordings: dict[tuple[str, str], Path] = {}
            for col in path_cols:
                cell = (rec.get(col) or "").strip()
                if not cell:
                    continue
                parts = col.split("_")
                if len(parts) != 3 or parts[1] not in VOWELS or parts[2] not in TASKS:
                    raise ManifestError(f"{path}: bad recording column {col!r}")
                recordings[(parts[1], parts[2])] = base / cell
            rows.append(SubjectRow(subject_id=sid, group=group,
                                   sex=(rec.get("sex") or "").strip(),
                                   age=age, scores=scores, recordings=recordings))
    return CohortManifest(rows=rows, path=path)
