"""Column schema: typed column declarations and the default trial-sheet schema.

Every ingested column is declared ahead of time with a kind, units, a
valid range and the number of missing cells expected in the reference
sheet. The default schema below mirrors the attribute list of the Oregon
russet trial sheets (yields in cwt/acre, expert ratings on 1-5 style
scales, two categorical trial descriptors) plus the engineered features
the pipeline adds.
"""

import json
from dataclasses import dataclass, field

from trialbench.errors import SchemaError

KINDS = ("mass", "count", "rating", "categorical", "derived", "response")

#: Columns that identify a row; consumed for keys, never modeled directly.
#: "Trial Region" is both a key component and a categorical feature, so it
#: appears in the schema as well.
KEY_COLUMNS = ("Year", "Trial Region", "Planting", "Clone ID")

PLANTINGS = ("early", "late")

#: Standard cultivars planted for yield normalization. Shepody and
#: Umatilla are Hermiston-only and enter control averages only there.
CONTROL_CLONES = ("Ranger Russet", "Russet Burbank", "Russet Norkotah")
HERMISTON_CONTROL_CLONES = ("Shepody", "Umatilla")
HERMISTON = "HER"


@dataclass(frozen=True)
class ColumnSpec:
    """Declaration of one data column.

    range is (min, max) in the column's units, or None when no valid
    range is declared. expected_na is the missing-cell count of the
    reference sheet and doubles as the default missingness profile.
    Categorical columns must declare their full level set.
    """

    name: str
    kind: str
    units: str = ""
    range: tuple[float, float] | None = None
    expected_na: int = 0
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown column kind {self.kind!r} for {self.name!r}")
        if self.range is not None:
            lo, hi = self.range
            if not lo <= hi:
                raise SchemaError(f"column {self.name!r} has range min > max")
            object.__setattr__(self, "range", (float(lo), float(hi)))
        if self.expected_na < 0:
            raise SchemaError(f"column {self.name!r} has negative expected_na")
        if self.kind == "categorical":
            if not self.levels:
                raise SchemaError(f"categorical column {self.name!r} declares no levels")
            object.__setattr__(self, "levels", tuple(str(v) for v in self.levels))
        elif self.levels is not None:
            raise SchemaError(f"non-categorical column {self.name!r} declares levels")

    @property
    def is_numeric(self) -> bool:
        return self.kind in ("mass", "count", "rating", "derived")

    def to_doc(self) -> dict:
        doc = {"name": self.name, "kind": self.kind, "units": self.units,
               "range": list(self.range) if self.range else None,
               "expected_na": self.expected_na}
        if self.levels is not None:
            doc["levels"] = list(self.levels)
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "ColumnSpec":
        rng = doc.get("range")
        return cls(name=doc["name"], kind=doc["kind"], units=doc.get("units", ""),
                   range=tuple(rng) if rng else None,
                   expected_na=int(doc.get("expected_na", 0)),
                   levels=tuple(doc["levels"]) if doc.get("levels") else None)


def load_schema(path) -> list[ColumnSpec]:
    """Read a JSON list of column declarations."""
    with open(path, encoding="utf-8") as fh:
        docs = json.load(fh)
    specs = [ColumnSpec.from_doc(doc) for doc in docs]
    names = [s.name for s in specs]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise SchemaError(f"duplicate column declarations: {sorted(dupes)}")
    return specs


def save_schema(specs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([s.to_doc() for s in specs], fh, indent=2)
        fh.write("\n")


def _mass(name, units, rng, na):
    return ColumnSpec(name, "mass", units, rng, na)


def _rating(name, rng, na):
    return ColumnSpec(name, "rating", "scale", rng, na)


def default_schema() -> list[ColumnSpec]:
    """Schema of the reference trial sheet plus engineered features.

    Expected NA counts are per 885 reference rows; they feed the default
    missingness profile used by the simulation engine. Ranges are the
    observed reference ranges where recorded, and conservative defaults
    for the two columns ("Yield Over 20 oz.", "Tuber/plant") whose
    reference range is not recorded.
    """
    return [
        _mass("Total Yield", "cwt/acre", (0, 1510), 47),
        ColumnSpec("Rank", "count", "rank", (1, 44), 47),
        _mass("% RB", "percent", (0, 274), 47),
        _mass("Yield No. 1's", "cwt/acre", (0, 983), 47),
        ColumnSpec("Rank (No. 1's)", "count", "rank", (1, 44), 47),
        _mass("% RB (No. 1's)", "percent", (0, 336), 47),
        _mass("% No. 1's", "percent", (0, 93), 51),
        _mass("> 10 oz.", "cwt/acre", (0, 787), 143),
        _mass("6-10 oz.", "cwt/acre", (0, 716), 144),
        _mass("4-6 oz.", "cwt/acre", (0, 240), 143),
        _mass("Yield No. 2's + > 20oz.", "cwt/acre", (0, 429), 51),
        _mass("Yield Under 4 oz.", "cwt/acre", (0, 807), 52),
        _mass("Yield Culls", "cwt/acre", (0, 178), 53),
        _mass("Yield Over 20 oz.", "cwt/acre", (0, 787), 140),
        _mass("Tuber/plant", "count/plant", (0, 20), 276),
        _mass("Average Tuber Size", "oz", (0, 20), 175),
        _mass("Length/Width Ratio", "ratio", (0.52, 3.5), 19),
        _mass("Specific Gravity", "ratio", (0, 1.1), 18),
        _mass("Fry Color Stem", "photovolts", (14.4, 72.9), 410),
        _mass("Fry Color Bud", "photovolts", (16.9, 76.3), 410),
        _rating("Hollow Heart", (0, 90), 40),
        _rating("Brown Center", (0, 30), 40),
        _rating("Black Spot Bruise", (0, 87.5), 169),
        _rating("Internal Brown Spot", (0, 100), 40),
        _rating("Vascular Discoloration", (0, 100), 40),
        _rating("Flower Color", (1, 4), 638),
        _rating("Vine Size", (1.3, 5.125), 583),
        _rating("Maturity", (0.1375, 5.75), 639),
        _rating("Skin Color", (1.35, 71.3), 290),
        _rating("Russeting", (1, 14.625), 153),
        _rating("Tuber Shape", (1, 5), 261),
        _rating("Shape Uniformity", (1, 5), 153),
        _rating("Eye Depth", (1, 5.5), 119),
        _rating("Greening", (1.625, 5), 153),
        _rating("Growth Cracks", (1, 5), 153),
        _rating("Scab", (2.625, 5), 325),
        _rating("Shatter Bruise", (2.16, 20.83), 176),
        ColumnSpec("Trial Region", "categorical", "region", None, 0,
                   levels=("HER", "ONT", "KF", "COR")),
        ColumnSpec("Year in trial", "categorical", "year", None, 0,
                   levels=("1", "2", "3")),
        ColumnSpec("Ctrl ave", "derived", "cwt/acre", (300, 900), 0),
        ColumnSpec("% CA", "derived", "percent", (0, 250), 47),
        ColumnSpec("GDD 1-60", "derived", "gdd", (0, 800), 0),
        ColumnSpec("GDD 61-90", "derived", "gdd", (0, 500), 0),
        ColumnSpec("GDD 91-end", "derived", "gdd", (0, 900), 0),
        ColumnSpec("true_keeps", "response", "binary", (0, 1), 0),
    ]
