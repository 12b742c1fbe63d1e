"""Experiment data types and ingestion of cross-validation score files.

The canonical input is a long-format CSV with header
``dataset,classifier,run,fold,score``: one row per cross-validation fold
result, run and fold as 0-based integers.  Scores may be fractions in
[0, 1] or percentages in [0, 100]; if any value in the file exceeds 1 the
whole file is treated as percentages and divided by 100.  The scale rule
is applied per file, never per row.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageError, ParseError, ShapeError

__all__ = [
    "CSV_HEADER",
    "Rope",
    "ScoreTable",
    "DiffSeries",
    "MeanDiffVector",
    "parse_scores",
    "paired_differences",
    "mean_differences",
]

CSV_HEADER = ("dataset", "classifier", "run", "fold", "score")


@dataclass(frozen=True)
class Rope:
    """Region of practical equivalence around a zero mean difference."""

    lower: float = -0.01
    upper: float = 0.01

    def __post_init__(self) -> None:
        if not (self.lower <= 0.0 <= self.upper):
            raise ValueError(f"rope must contain zero, got [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class ScoreTable:
    """Per-dataset, per-classifier matrices of cross-validation scores.

    Every matrix has the same runs x folds shape; scores are fractions in
    [0, 1] after ingestion.
    """

    entries: dict[tuple[str, str], np.ndarray]
    runs: int
    folds: int

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("score table has no entries")
        for (dataset, classifier), scores in self.entries.items():
            if not dataset or not classifier:
                raise ValueError("dataset and classifier ids must be non-empty")
            if scores.shape != (self.runs, self.folds):
                raise ShapeError(
                    f"({dataset}, {classifier}) has shape {scores.shape}, "
                    f"expected {(self.runs, self.folds)}"
                )
            if np.any(scores < 0.0) or np.any(scores > 1.0):
                raise ValueError(f"({dataset}, {classifier}) has scores outside [0, 1]")

    @property
    def datasets(self) -> tuple[str, ...]:
        seen = dict.fromkeys(d for d, _ in self.entries)
        return tuple(seen)

    @property
    def classifiers(self) -> tuple[str, ...]:
        seen = dict.fromkeys(c for _, c in self.entries)
        return tuple(seen)

    def scores(self, dataset: str, classifier: str) -> np.ndarray:
        return self.entries[(dataset, classifier)]

    def to_csv(self) -> str:
        """Serialize back to the long CSV schema (round-trips bit-exactly)."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for (dataset, classifier), scores in self.entries.items():
            for run in range(self.runs):
                for fold in range(self.folds):
                    writer.writerow([dataset, classifier, run, fold, repr(float(scores[run, fold]))])
        return out.getvalue()


@dataclass(frozen=True)
class DiffSeries:
    """Paired score differences (first minus second classifier) for one dataset.

    Carries the cross-validation correlation ``rho`` and the sufficient
    statistics (mean, sample standard deviation with divisor n-1) derived
    from ``x``.
    """

    dataset: str
    x: np.ndarray
    rho: float
    n: int = field(init=False)
    mean: float = field(init=False)
    sd: float = field(init=False)

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("difference series needs at least two observations")
        if np.any(np.abs(x) > 1.0):
            raise ValueError("score differences must lie in [-1, 1]")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        object.__setattr__(self, "n", int(x.size))
        if np.all(x == x[0]):
            # constant data: avoid 1-ulp residue so the degenerate case is exact
            object.__setattr__(self, "mean", float(x[0]))
            object.__setattr__(self, "sd", 0.0)
        else:
            object.__setattr__(self, "mean", float(x.mean()))
            object.__setattr__(self, "sd", float(x.std(ddof=1)))

    @property
    def ss(self) -> float:
        """Centred sum of squares, sd^2 * (n - 1)."""
        return self.sd * self.sd * (self.n - 1)


@dataclass(frozen=True)
class MeanDiffVector:
    """Per-dataset mean differences for a classifier pair."""

    z: np.ndarray
    datasets: tuple[str, ...]

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=float)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "datasets", tuple(self.datasets))
        if z.ndim != 1 or z.size == 0:
            raise ValueError("mean-difference vector must be non-empty")
        if len(self.datasets) != z.size:
            raise ValueError("dataset labels and values have different lengths")
        if np.any(np.abs(z) > 1.0):
            raise ValueError("mean differences must lie in [-1, 1]")

    @property
    def q(self) -> int:
        return int(self.z.size)


def _as_text_lines(source) -> list[str]:
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif hasattr(source, "read"):
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    else:
        raise TypeError(f"cannot read scores from {type(source)!r}")
    return text.splitlines()


def parse_scores(source) -> ScoreTable:
    """Parse the long CSV schema into a validated :class:`ScoreTable`.

    ``source`` may be a str, bytes, or a file-like object (UTF-8, LF or
    CRLF).  Raises :class:`ParseError` with the offending line number for
    malformed rows and :class:`ShapeError` for ragged matrices.
    """
    lines = _as_text_lines(source)
    rows = list(csv.reader(lines))
    if not rows:
        raise ParseError("no rows")
    header = tuple(h.strip().lower() for h in rows[0])
    if header != CSV_HEADER:
        raise ParseError(f"expected header {','.join(CSV_HEADER)}, got {','.join(rows[0])}", line=1)
    if len(rows) == 1:
        raise ParseError("no rows")

    cells: dict[tuple[str, str], dict[tuple[int, int], float]] = {}
    max_score = 0.0
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ParseError(f"expected 5 columns, got {len(row)}", line=lineno)
        dataset, classifier = row[0].strip(), row[1].strip()
        if not dataset or not classifier:
            raise ParseError("empty dataset or classifier id", line=lineno)
        try:
            run, fold = int(row[2]), int(row[3])
        except ValueError:
            raise ParseError(f"run/fold must be integers, got {row[2]!r}/{row[3]!r}", line=lineno) from None
        if run < 0 or fold < 0:
            raise ParseError("run and fold must be non-negative", line=lineno)
        try:
            score = float(row[4])
        except ValueError:
            raise ParseError(f"non-numeric score {row[4]!r}", line=lineno) from None
        if not math.isfinite(score) or score < 0.0 or score > 100.0:
            raise ParseError(f"score {score!r} outside [0, 100]", line=lineno)
        key = (dataset, classifier)
        grid = cells.setdefault(key, {})
        if (run, fold) in grid:
            raise ParseError(f"duplicate cell for {key} run={run} fold={fold}", line=lineno)
        grid[(run, fold)] = score
        max_score = max(max_score, score)

    if not cells:
        raise ParseError("no rows")
    percent = max_score > 1.0
    first = next(iter(cells))
    runs = 1 + max(r for r, _ in cells[first])
    folds = 1 + max(f for _, f in cells[first])
    entries: dict[tuple[str, str], np.ndarray] = {}
    for key, grid in cells.items():
        if len(grid) != runs * folds or any(
            (r, f) not in grid for r in range(runs) for f in range(folds)
        ):
            raise ShapeError(
                f"{key} has {len(grid)} cells, expected a complete {runs} x {folds} grid"
            )
        scores = np.empty((runs, folds))
        for (r, f), value in grid.items():
            scores[r, f] = value / 100.0 if percent else value
        entries[key] = scores
    return ScoreTable(entries=entries, runs=runs, folds=folds)


def paired_differences(
    table: ScoreTable, a: str, b: str, rho: float | None = None
) -> list[DiffSeries]:
    """Per-dataset difference series ``scores(a) - scores(b)``.

    Fold alignment is positional (both classifiers were run on the same
    splits).  ``rho`` defaults to the n_te / n_tot heuristic, which is
    1 / folds for k-fold cross-validation.
    """
    missing = [
        d for d in table.datasets
        if (d, a) not in table.entries or (d, b) not in table.entries
    ]
    if missing:
        raise CoverageError(f"classifiers {a!r}/{b!r} missing for datasets: {', '.join(missing)}")
    if rho is None:
        rho = 1.0 / table.folds
    out = []
    for dataset in table.datasets:
        x = (table.scores(dataset, a) - table.scores(dataset, b)).ravel(order="C")
        out.append(DiffSeries(dataset=dataset, x=x, rho=rho))
    return out


def mean_differences(diffs: list[DiffSeries]) -> MeanDiffVector:
    """Collapse difference series to the per-dataset means, order preserved."""
    if not diffs:
        raise ValueError("need at least one difference series")
    return MeanDiffVector(
        z=np.array([d.mean for d in diffs]),
        datasets=tuple(d.dataset for d in diffs),
    )
