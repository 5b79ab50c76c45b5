"""Stated-choice survey data: scenarios, records, support, validation."""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field, replace

import numpy as np

EMPLOYERS_PUB = ("administration", "public_firm")
EMPLOYERS_PRIV = ("sme", "large_firm")

#: canonical CSV column order
CSV_COLUMNS = [
    "respondent_id",
    "scenario_index",
    "p_stated",
    "wage_pub",
    "wage_priv",
    "employer_pub",
    "employer_priv",
    "hours_pub",
    "hours_priv",
    "layoff_pub",
    "layoff_priv",
    "promo_pub",
    "promo_priv",
]


class SchemaError(ValueError):
    """The file as a whole is unusable (missing column, no records)."""


class RowError(ValueError):
    """A single row failed to parse or violated a bound."""

    def __init__(self, row_number, message):
        self.row_number = row_number
        super().__init__(f"row {row_number}: {message}")


@dataclass(frozen=True)
class Scenario:
    """One hypothetical offer pair: a public-sector and a private-sector job.

    Wages are monthly, in kCFA (thousands of CFA francs).
    """

    y0: float  # public-sector wage
    y1: float  # private-sector wage
    employer_pub: str = "administration"
    employer_priv: str = "sme"
    hours_pub: float = 40.0
    hours_priv: float = 40.0
    layoff_pub: float = 0.05
    layoff_priv: float = 0.05
    promo_pub: float = 0.10
    promo_priv: float = 0.10

    def __post_init__(self):
        if self.y0 <= 0 or self.y1 <= 0:
            raise ValueError(f"wages must be positive, got y0={self.y0}, y1={self.y1}")
        for name in ("layoff_pub", "layoff_priv", "promo_pub", "promo_priv"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        for name in ("hours_pub", "hours_priv"):
            v = getattr(self, name)
            if not 0.0 < v < 100.0:
                raise ValueError(f"{name}={v} outside (0, 100)")
        if self.employer_pub not in EMPLOYERS_PUB:
            raise ValueError(f"employer_pub must be one of {EMPLOYERS_PUB}")
        if self.employer_priv not in EMPLOYERS_PRIV:
            raise ValueError(f"employer_priv must be one of {EMPLOYERS_PRIV}")

    def shift_y0(self, s: float) -> "Scenario":
        """Return the scenario with the public wage topped up by ``s`` kCFA."""
        return replace(self, y0=self.y0 + s)

    def shifted(self, h: dict) -> "Scenario":
        """Return the scenario with attribute deltas ``h`` added field-wise.

        Employer fields, being categorical, are replaced rather than added.
        """
        kwargs = {}
        for name, delta in h.items():
            if name in ("employer_pub", "employer_priv"):
                kwargs[name] = delta
            else:
                kwargs[name] = getattr(self, name) + delta
        return replace(self, **kwargs)


@dataclass(frozen=True)
class ChoiceRecord:
    """One elicitation: a respondent's stated probability for one scenario."""

    respondent_id: str
    scenario_index: int
    scenario: Scenario
    p_stated: float

    def __post_init__(self):
        if not 0.0 <= self.p_stated <= 1.0:
            raise ValueError(f"p_stated={self.p_stated} outside [0, 1]")
        if self.scenario_index < 1:
            raise ValueError("scenario_index must be >= 1")


@dataclass(frozen=True)
class SupportSpec:
    """Admissible ranges/levels of scenario attributes in the experiment."""

    wage_min: float = 300.0
    wage_max: float = 1000.0
    wage_step: float = 50.0
    hours_pub_levels: tuple = (35.0, 40.0)
    hours_priv_levels: tuple = (40.0, 50.0, 60.0)
    layoff_pub_levels: tuple = (0.02, 0.05, 0.10)
    layoff_priv_levels: tuple = (0.10, 0.20, 0.30)
    promo_pub_levels: tuple = (0.05, 0.10, 0.20)
    promo_priv_levels: tuple = (0.05, 0.10, 0.20)
    employer_pub_levels: tuple = EMPLOYERS_PUB
    employer_priv_levels: tuple = EMPLOYERS_PRIV

    def __post_init__(self):
        if self.wage_min > self.wage_max:
            raise ValueError("wage_min > wage_max")
        if self.wage_step <= 0:
            raise ValueError("wage_step must be positive")

    def contains(self, x: Scenario) -> bool:
        """True iff every attribute of ``x`` is inside the support.

        Wages are checked against the range only; randomised levels are
        checked by membership.
        """
        if not (self.wage_min <= x.y0 <= self.wage_max):
            return False
        if not (self.wage_min <= x.y1 <= self.wage_max):
            return False
        checks = [
            (x.hours_pub, self.hours_pub_levels),
            (x.hours_priv, self.hours_priv_levels),
            (x.layoff_pub, self.layoff_pub_levels),
            (x.layoff_priv, self.layoff_priv_levels),
            (x.promo_pub, self.promo_pub_levels),
            (x.promo_priv, self.promo_priv_levels),
        ]
        for value, levels in checks:
            if not any(np.isclose(value, lv) for lv in levels):
                return False
        return (
            x.employer_pub in self.employer_pub_levels
            and x.employer_priv in self.employer_priv_levels
        )

    def sample_scenario(self, rng: np.random.Generator) -> Scenario:
        """Draw one scenario uniformly from the support."""
        wages = np.arange(self.wage_min, self.wage_max + 0.5 * self.wage_step, self.wage_step)
        return Scenario(
            y0=float(rng.choice(wages)),
            y1=float(rng.choice(wages)),
            employer_pub=str(rng.choice(self.employer_pub_levels)),
            employer_priv=str(rng.choice(self.employer_priv_levels)),
            hours_pub=float(rng.choice(self.hours_pub_levels)),
            hours_priv=float(rng.choice(self.hours_priv_levels)),
            layoff_pub=float(rng.choice(self.layoff_pub_levels)),
            layoff_priv=float(rng.choice(self.layoff_priv_levels)),
            promo_pub=float(rng.choice(self.promo_pub_levels)),
            promo_priv=float(rng.choice(self.promo_priv_levels)),
        )

    def to_json_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json_dict(cls, d: dict) -> "SupportSpec":
        kwargs = dict(d)
        for k, v in kwargs.items():
            if isinstance(v, list):
                kwargs[k] = tuple(v)
        return cls(**kwargs)


def in_identified_region(support: SupportSpec, s: float, x: Scenario) -> bool:
    """True iff topping up the public wage by ``s`` keeps the offer in support.

    Grid points with a shifted wage outside the experimental wage range are
    extrapolations and get masked in reports.
    """
    return support.wage_min <= x.y0 + s <= support.wage_max


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of choice records plus the design support."""

    records: tuple
    support: SupportSpec = field(default_factory=SupportSpec)

    def __post_init__(self):
        if len(self.records) == 0:
            raise SchemaError("no records")
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self):
        return len(self.records)

    def respondents(self) -> dict:
        """Records grouped by respondent, ordered by scenario index."""
        groups: dict = {}
        for r in self.records:
            groups.setdefault(r.respondent_id, []).append(r)
        for rid in groups:
            groups[rid].sort(key=lambda r: r.scenario_index)
        return groups

    def save(self, path) -> None:
        """Write the canonical CSV schema (round-trips with load_dataset)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.records:
                x = r.scenario
                writer.writerow(
                    [
                        r.respondent_id,
                        r.scenario_index,
                        _fmt(r.p_stated),
                        _fmt(x.y0),
                        _fmt(x.y1),
                        x.employer_pub,
                        x.employer_priv,
                        _fmt(x.hours_pub),
                        _fmt(x.hours_priv),
                        _fmt(x.layoff_pub),
                        _fmt(x.layoff_priv),
                        _fmt(x.promo_pub),
                        _fmt(x.promo_priv),
                    ]
                )


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def load_dataset(path, schema: dict | None = None, support: SupportSpec | None = None) -> Dataset:
    """Read a stated-choice CSV into a Dataset.

    ``schema`` optionally maps canonical column names to the file's column
    names and may carry ``{"wage_unit": "cfa"}`` when wages are in plain CFA
    (they are then divided by 1000).
    """
    schema = dict(schema or {})
    wage_unit = schema.pop("wage_unit", "kcfa")
    colmap = {c: schema.get(c, c) for c in CSV_COLUMNS}
    wage_div = 1000.0 if wage_unit == "cfa" else 1.0

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError("no records")
        for canonical, actual in colmap.items():
            if actual not in reader.fieldnames:
                raise SchemaError(f"missing column: {actual}")
        records = []
        for row_number, row in enumerate(reader, start=2):
            records.append(_parse_row(row, colmap, wage_div, row_number))
    if not records:
        raise SchemaError("no records")
    return Dataset(records=tuple(records), support=support or SupportSpec())


def _parse_row(row, colmap, wage_div, row_number) -> ChoiceRecord:
    def cell(name):
        return row[colmap[name]]

    def num(name):
        raw = cell(name)
        try:
            return float(raw)
        except (TypeError, ValueError):
            raise RowError(row_number, f"unparseable value {raw!r} in column {colmap[name]}")

    p = num("p_stated")
    if not 0.0 <= p <= 1.0:
        raise RowError(row_number, f"probability out of range: p_stated={p}")
    try:
        scenario = Scenario(
            y0=num("wage_pub") / wage_div,
            y1=num("wage_priv") / wage_div,
            employer_pub=cell("employer_pub"),
            employer_priv=cell("employer_priv"),
            hours_pub=num("hours_pub"),
            hours_priv=num("hours_priv"),
            layoff_pub=num("layoff_pub"),
            layoff_priv=num("layoff_priv"),
            promo_pub=num("promo_pub"),
            promo_priv=num("promo_priv"),
        )
        return ChoiceRecord(
            respondent_id=str(cell("respondent_id")),
            scenario_index=int(cell("scenario_index")),
            scenario=scenario,
            p_stated=p,
        )
    except RowError:
        raise
    except ValueError as exc:
        raise RowError(row_number, str(exc))


@dataclass(frozen=True)
class ValidationReport:
    """Per-rule violation counts; reporting only, never raises."""

    n_records: int
    n_respondents: int
    out_of_support: int
    duplicate_keys: int
    heaping_share: float  # share of p on multiples of 0.10
    single_scenario_respondents: int
    paired_count: int  # respondents with >= 2 scenarios
    qwtp_gate_open: bool  # paired answers exist, so qWTP/mWTP are computable


def validate(d: Dataset) -> ValidationReport:
    """Diagnose a dataset without mutating it."""
    seen = set()
    duplicates = 0
    out_of_support = 0
    heaped = 0
    for r in d.records:
        key = (r.respondent_id, r.scenario_index)
        if key in seen:
            duplicates += 1
        seen.add(key)
        if not d.support.contains(r.scenario):
            out_of_support += 1
        if np.isclose(round(r.p_stated * 10.0) / 10.0, r.p_stated):
            heaped += 1
    groups = d.respondents()
    paired = sum(1 for recs in groups.values() if len(recs) >= 2)
    return ValidationReport(
        n_records=len(d),
        n_respondents=len(groups),
        out_of_support=out_of_support,
        duplicate_keys=duplicates,
        heaping_share=heaped / len(d),
        single_scenario_respondents=sum(1 for recs in groups.values() if len(recs) == 1),
        paired_count=paired,
        qwtp_gate_open=paired > 0,
    )
