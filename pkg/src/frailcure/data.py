"""Clustered right-censored family data, parameter containers and CSV I/O."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .baseline import BaselineParams
from .cure import CureRateParams, FrailtyPrior

__all__ = [
    "ROLES",
    "SubjectRecord",
    "Family",
    "ParamSet",
    "FhLabel",
    "Cohort",
    "DataError",
    "event_count",
    "fh_indicator",
    "pack",
    "read_csv",
    "write_csv",
]

ROLES = ("main", "mother", "sister")

CSV_COLUMNS = ("family_id", "subject_id", "role", "age", "event")
CSV_OPTIONAL = ("birth_year", "event_year", "true_frailty", "fh_change_age")


class DataError(ValueError):
    """Malformed input data (bad CSV row, invalid family)."""


@dataclass(frozen=True)
class SubjectRecord:
    """Observed age ``x = min(t, c)`` and event indicator ``delta``.

    ``birth_year`` and ``event_year`` are calendar bookkeeping carried only by
    simulated records.
    """

    x: float
    delta: int
    role: str = "sister"
    subject_id: str = ""
    birth_year: float | None = None
    event_year: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.x) and self.x >= 0):
            raise DataError(f"observed age must be finite and >= 0, got {self.x}")
        if self.delta not in (0, 1):
            raise DataError(f"event indicator must be 0 or 1, got {self.delta}")
        if self.role not in ROLES:
            raise DataError(f"role must be one of {ROLES}, got {self.role!r}")


@dataclass(frozen=True)
class Family:
    id: str
    members: tuple[SubjectRecord, ...]
    true_frailty: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(self.members) < 1:
            raise DataError(f"family {self.id!r} has no members")
        if sum(m.role == "main" for m in self.members) > 1:
            raise DataError(f"family {self.id!r} has more than one main subject")
        if self.true_frailty is not None and not self.true_frailty > 0:
            raise DataError(f"family {self.id!r}: true frailty must be positive")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def main_index(self) -> int | None:
        for i, m in enumerate(self.members):
            if m.role == "main":
                return i
        return None


@dataclass(frozen=True)
class ParamSet:
    """Full model parameters: frailty ``theta``, cure fraction ``p``, baseline."""

    theta: float
    p: float
    gamma: BaselineParams

    def __post_init__(self):
        FrailtyPrior(self.theta)
        CureRateParams(self.p, self.gamma)

    @property
    def cure(self) -> CureRateParams:
        return CureRateParams(self.p, self.gamma)

    @property
    def prior(self) -> FrailtyPrior:
        return FrailtyPrior(self.theta)

    def as_dict(self) -> dict:
        return {
            "theta": self.theta,
            "p": self.p,
            "distribution": self.gamma.name,
            **dict(zip(self.gamma.param_names(), self.gamma.params)),
        }


@dataclass(frozen=True)
class FhLabel:
    fh_end: int
    fh_change_age: float | None = None

    def __post_init__(self):
        if self.fh_end not in (0, 1):
            raise DataError("fh_end must be 0 or 1")
        if self.fh_change_age is not None and self.fh_end != 1:
            raise DataError("a change age requires fh_end == 1")


def event_count(f: Family) -> int:
    return sum(m.delta for m in f.members)


def fh_indicator(f: Family, main_index: int | None = None) -> FhLabel:
    """Family-history label of the main subject, built from relatives only.

    The change age is the main subject's age at the first relative event in
    calendar time; it needs ``birth_year``/``event_year`` on the records and is
    floored at 0 when the relative's event predates the main subject's birth.
    """
    if main_index is None:
        main_index = f.main_index
    if main_index is None:
        raise DataError(f"family {f.id!r} has no main subject")
    if not 0 <= main_index < f.size:
        raise DataError(f"main index {main_index} out of range for family {f.id!r}")
    relatives = [m for i, m in enumerate(f.members) if i != main_index]
    cases = [m for m in relatives if m.delta == 1]
    if not cases:
        return FhLabel(0, None)
    main = f.members[main_index]
    years = [m.event_year for m in cases]
    if main.birth_year is None or any(y is None for y in years):
        return FhLabel(1, None)
    return FhLabel(1, max(0.0, min(years) - main.birth_year))


@dataclass(frozen=True)
class Cohort:
    """Flat array view of a list of families, used by the vectorised paths.

    ``family_index[k]`` maps subject ``k`` to its family position.
    """

    x: np.ndarray
    delta: np.ndarray
    family_index: np.ndarray
    n_families: int
    ids: tuple[str, ...] = field(default=())

    @property
    def n_subjects(self) -> int:
        return int(self.x.size)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.family_index, minlength=self.n_families)

    @property
    def events(self) -> np.ndarray:
        return np.bincount(self.family_index, weights=self.delta, minlength=self.n_families)

    def family_sum(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.family_index, weights=values, minlength=self.n_families)


def pack(families: Sequence[Family] | Cohort) -> Cohort:
    if isinstance(families, Cohort):
        return families
    if len(families) == 0:
        raise DataError("no families")
    x = np.fromiter((m.x for f in families for m in f.members), dtype=float)
    delta = np.fromiter((m.delta for f in families for m in f.members), dtype=float)
    idx = np.repeat(np.arange(len(families)), [f.size for f in families])
    return Cohort(x, delta, idx, len(families), tuple(f.id for f in families))


# ---------------------------------------------------------------------------
# CSV


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, families: Iterable[Family], fh_labels=None) -> None:
    """Write families in the long one-row-per-subject format.

    Calendar columns and ``true_frailty`` are written when any record carries
    them; ``fh_change_age`` is written when ``fh_labels`` is given.
    """
    families = list(families)
    members = [m for f in families for m in f.members]
    cols = list(CSV_COLUMNS)
    if any(m.birth_year is not None for m in members):
        cols += ["birth_year", "event_year"]
    if any(f.true_frailty is not None for f in families):
        cols.append("true_frailty")
    if fh_labels is not None:
        cols.append("fh_change_age")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i, f in enumerate(families):
            label = fh_labels[i] if fh_labels is not None else None
            for j, m in enumerate(f.members):
                row = {
                    "family_id": f.id,
                    "subject_id": m.subject_id or f"{f.id}.{j}",
                    "role": m.role,
                    "age": m.x,
                    "event": m.delta,
                    "birth_year": m.birth_year,
                    "event_year": m.event_year,
                    "true_frailty": f.true_frailty,
                    "fh_change_age": (
                        label.fh_change_age if label is not None and m.role == "main" else None
                    ),
                }
                w.writerow([_fmt(row[c]) for c in cols])


def _opt_float(row, key, lineno):
    v = row.get(key)
    if v is None or v.strip() == "":
        return None
    try:
        return float(v)
    except ValueError:
        raise DataError(f"line {lineno}: column {key!r} is not a number: {v!r}") from None


def read_csv(path) -> tuple[list[Family], dict[str, float]]:
    """Read families from CSV.

    Returns the families (in order of first appearance) and a mapping from
    family id to any ``fh_change_age`` supplied for its main subject.
    """
    rows: dict[str, list[SubjectRecord]] = {}
    frailty: dict[str, float | None] = {}
    change_age: dict[str, float] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError("line 1: empty file, header required")
        missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise DataError(f"line 1: header missing columns {missing}")
        for row in reader:
            lineno = reader.line_num
            try:
                age = float(row["age"])
                event = int(row["event"])
            except (TypeError, ValueError):
                raise DataError(f"line {lineno}: bad age/event values") from None
            try:
                rec = SubjectRecord(
                    x=age,
                    delta=event,
                    role=row["role"].strip(),
                    subject_id=row["subject_id"],
                    birth_year=_opt_float(row, "birth_year", lineno),
                    event_year=_opt_float(row, "event_year", lineno),
                )
            except DataError as e:
                raise DataError(f"line {lineno}: {e}") from None
            fid = row["family_id"]
            rows.setdefault(fid, []).append(rec)
            tf = _opt_float(row, "true_frailty", lineno)
            if tf is not None:
                frailty[fid] = tf
            ca = _opt_float(row, "fh_change_age", lineno)
            if ca is not None:
                change_age[fid] = ca
    if not rows:
        raise DataError("no data rows")
    families = []
    for fid, members in rows.items():
        try:
            families.append(Family(fid, tuple(members), frailty.get(fid)))
        except DataError as e:
            raise DataError(f"family {fid!r}: {e}") from None
    return families, change_age
