"""Table rendering and CSV output in the published layouts."""

import csv
import io

from trialbench.metrics import ConfusionCounts

#: fixed column orders so diff-based regression tests stay stable
BENCH_COLUMNS = ("Model", "Variant", "Test MCC", "CI lo", "CI hi",
                 "Accuracy", "F1", "AUC")
SELECT_COLUMNS = ("Fraction", "Model", "Variant", "Accuracy", "F1", "MCC")
SIM_COLUMNS = ("TRIAL", "MODEL", "TP", "FP", "FN", "TN", "ROC", "MCC", "SE")


def render_confusion(c: ConfusionCounts, normalize: str = "counts") -> str:
    """Two-by-two confusion grid as text; rows are true classes.

    With normalize="row_proportions" each row is divided by its row sum;
    a row whose true class is absent renders as "—".
    """
    if normalize not in ("counts", "row_proportions"):
        raise ValueError(f"unknown normalize mode {normalize!r}")
    rows = [[c.tn, c.fp], [c.fn, c.tp]]
    if normalize == "row_proportions":
        cells = []
        for row in rows:
            total = sum(row)
            if total == 0:
                cells.append(["—", "—"])
            else:
                cells.append([f"{v / total:.4f}" for v in row])
    else:
        cells = [[str(v) for v in row] for row in rows]
    width = max(len(v) for row in cells for v in row)
    width = max(width, len("pred 1"))
    lines = [f"{'':8s} {'pred 0':>{width}s} {'pred 1':>{width}s}"]
    for label, row in zip(("true 0", "true 1"), cells):
        lines.append(f"{label:8s} {row[0]:>{width}s} {row[1]:>{width}s}")
    return "\n".join(lines) + "\n"


def confusion_proportions(c: ConfusionCounts) -> dict:
    """Row-normalized rates; NaN rows where a true class is absent."""
    neg = c.tn + c.fp
    pos = c.fn + c.tp
    return {"tn_rate": c.tn / neg if neg else float("nan"),
            "fp_rate": c.fp / neg if neg else float("nan"),
            "fn_rate": c.fn / pos if pos else float("nan"),
            "tp_rate": c.tp / pos if pos else float("nan")}


def write_csv(path, columns, rows) -> None:
    """Write dict rows in a fixed column order with exact float repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in columns])


def format_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
