"""Agreement, correlation, classification and association statistics.

Everything here is a pure function over plain data; each implementation is
checked against an independently written brute-force oracle in the test
suite, so keep the algebra explicit rather than delegating to a stats
library.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from scipy.special import stdtr

from .errors import DegenerateDataError, UndefinedCorrelationError

SALIENCE_LEVELS = {"low": (1, 2), "mid": (3,), "high": (4, 5)}


# --------------------------------------------------------------------------
# Input carriers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RatingMatrix:
    """Items x raters grid of ordinal ratings; ``None`` marks a missing cell."""

    ratings: tuple[tuple[int | None, ...], ...]
    scale: tuple[int, ...] = (0, 1, 2, 3, 4, 5)

    def __post_init__(self):
        if self.ratings and len(self.ratings[0]) < 2:
            raise DegenerateDataError("a rating matrix needs at least 2 raters")
        width = len(self.ratings[0]) if self.ratings else 0
        allowed = set(self.scale)
        for row in self.ratings:
            if len(row) != width:
                raise DegenerateDataError("ragged rating matrix")
            for v in row:
                if v is not None and v not in allowed:
                    raise DegenerateDataError(f"rating {v} not on declared scale {self.scale}")

    @classmethod
    def from_annotations(
        cls,
        triples: Iterable[tuple[str, str, int]],
        scale: tuple[int, ...] = (0, 1, 2, 3, 4, 5),
    ) -> "RatingMatrix":
        """Build a grid from (item_id, rater_id, score) triples."""
        cells: dict[str, dict[str, int]] = defaultdict(dict)
        raters: set[str] = set()
        for item, rater, score in triples:
            cells[item][rater] = score
            raters.add(rater)
        rater_order = sorted(raters)
        rows = tuple(
            tuple(cells[item].get(r) for r in rater_order) for item in sorted(cells)
        )
        return cls(ratings=rows, scale=scale)

    def pairable_units(self) -> list[list[int]]:
        """Per-item rating lists restricted to items with >= 2 ratings."""
        units = []
        for row in self.ratings:
            vals = [v for v in row if v is not None]
            if len(vals) >= 2:
                units.append(vals)
        return units


@dataclass(frozen=True)
class PairedSeries:
    """Two aligned numeric series over the same items."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.xs) != len(self.ys):
            raise ValueError("paired series must have equal length")
        if len(self.xs) < 2:
            raise ValueError("paired series needs at least 2 pairs")
        if self.ids is not None and len(self.ids) != len(self.xs):
            raise ValueError("ids must align with the series")

    @classmethod
    def of(cls, xs: Sequence[float], ys: Sequence[float], ids: Sequence[str] | None = None):
        return cls(tuple(float(x) for x in xs), tuple(float(y) for y in ys),
                   tuple(ids) if ids is not None else None)

    def __len__(self) -> int:
        return len(self.xs)


# --------------------------------------------------------------------------
# Krippendorff's alpha, ordinal
# --------------------------------------------------------------------------


def krippendorff_alpha_ordinal(matrix: RatingMatrix) -> float:
    """Chance-corrected agreement with rank-distance weighting.

    Uses the coincidence-matrix formulation: within every item with at least
    two ratings, each ordered rating pair contributes 1/(m-1) to the
    coincidence cell of its two values. The ordinal difference between values
    c <= k is the squared mass between them,
    (sum of margins from c to k inclusive - (margin_c + margin_k)/2)^2,
    and alpha = 1 - D_observed / D_expected.
    """
    units = matrix.pairable_units()
    if not units:
        raise DegenerateDataError("no items with at least 2 ratings")

    coincidence: dict[tuple[int, int], float] = defaultdict(float)
    for vals in units:
        m = len(vals)
        for i, a in enumerate(vals):
            for j, b in enumerate(vals):
                if i != j:
                    coincidence[(a, b)] += 1.0 / (m - 1)

    values = sorted({v for vals in units for v in vals})
    margin = {c: sum(coincidence[(c, k)] for k in values) for c in values}
    n = sum(margin.values())

    def delta_sq(c: int, k: int) -> float:
        lo, hi = (c, k) if c <= k else (k, c)
        between = sum(margin[g] for g in values if lo <= g <= hi)
        d = between - (margin[lo] + margin[hi]) / 2.0
        return d * d

    d_obs = 0.0
    d_exp = 0.0
    for c in values:
        for k in values:
            if c == k:
                continue
            w = delta_sq(c, k)
            d_obs += coincidence[(c, k)] * w
            d_exp += margin[c] * margin[k] * w
    d_obs /= n
    d_exp /= n * (n - 1.0)

    if d_exp == 0.0:
        if d_obs == 0.0:
            return 1.0
        raise DegenerateDataError("zero expected disagreement with nonzero observed")
    return 1.0 - d_obs / d_exp


# --------------------------------------------------------------------------
# Error / correlation metrics
# --------------------------------------------------------------------------


def mae(p: PairedSeries) -> float:
    """Mean absolute difference between the two series."""
    return sum(abs(x - y) for x, y in zip(p.xs, p.ys)) / len(p)


def midranks(xs: Sequence[float]) -> list[float]:
    """1-based ranks with ties assigned the average of their positions."""
    n = len(xs)
    order = sorted(range(n), key=lambda i: xs[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("zero variance in a rank vector")
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    p_value: float


def spearman_rho(p: PairedSeries) -> SpearmanResult:
    """Spearman rank correlation as Pearson over mid-ranks, with a
    t-approximation two-sided p-value."""
    if len(p) < 3:
        raise ValueError("spearman_rho needs at least 3 pairs")
    rho = _pearson(midranks(p.xs), midranks(p.ys))
    n = len(p)
    if abs(rho) >= 1.0:
        return SpearmanResult(rho=max(-1.0, min(1.0, rho)), p_value=0.0)
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p_value = 2.0 * float(stdtr(n - 2, -abs(t)))
    return SpearmanResult(rho=rho, p_value=p_value)


def kendall_tau(p: PairedSeries) -> float:
    """Kendall's tau-b by pairwise concordance counting with tie correction."""
    concordant = discordant = ties_x_only = ties_y_only = 0
    xs, ys = p.xs, p.ys
    n = len(p)
    for i in range(n):
        for j in range(i + 1, n):
            dx = (xs[i] > xs[j]) - (xs[i] < xs[j])
            dy = (ys[i] > ys[j]) - (ys[i] < ys[j])
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                ties_x_only += 1
            elif dy == 0:
                ties_y_only += 1
            elif dx == dy:
                concordant += 1
            else:
                discordant += 1
    denom_x = concordant + discordant + ties_y_only  # pairs untied in x
    denom_y = concordant + discordant + ties_x_only  # pairs untied in y
    if denom_x == 0 or denom_y == 0:
        raise UndefinedCorrelationError("tau undefined: a series is fully tied")
    return (concordant - discordant) / math.sqrt(denom_x * denom_y)


def macro_f1(pred: Sequence[int], gold: Sequence[int], label_set: Iterable[int]) -> float:
    """Unweighted mean of per-label F1 over a fixed label set.

    Labels absent from both predictions and gold still contribute an F1 of 0,
    so degenerate constant predictions are penalized.
    """
    if len(pred) != len(gold):
        raise ValueError("pred and gold must have equal length")
    labels = sorted(set(label_set))
    if not labels:
        raise ValueError("label_set must be non-empty")
    allowed = set(labels)
    for v in list(pred) + list(gold):
        if v not in allowed:
            raise ValueError(f"label {v} outside declared label set {labels}")

    total = 0.0
    for label in labels:
        tp = sum(1 for p_, g in zip(pred, gold) if p_ == label and g == label)
        fp = sum(1 for p_, g in zip(pred, gold) if p_ == label and g != label)
        fn = sum(1 for p_, g in zip(pred, gold) if p_ != label and g == label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        total += f1
    return total / len(labels)


# --------------------------------------------------------------------------
# PMI between question type and salience level
# --------------------------------------------------------------------------


def salience_level(score: int) -> str:
    """Bin a 1..5 salience score into low / mid / high."""
    for name, scores in SALIENCE_LEVELS.items():
        if score in scores:
            return name
    raise ValueError(f"salience score {score} not in 1..5")


def pmi_by_type(typed_scores: Iterable[tuple[str, int]]) -> dict[tuple[str, str], float | None]:
    """Pointwise mutual information between question type and salience level.

    Input is (question_type, aggregated salience 1..5) pairs. Levels are
    low={1,2}, mid={3}, high={4,5}. PMI uses the natural log; cells with zero
    joint mass are reported as None (undefined).
    """
    pairs = [(t, salience_level(s)) for t, s in typed_scores]
    if not pairs:
        raise ValueError("pmi_by_type needs at least one typed, scored question")
    n = len(pairs)
    joint = Counter(pairs)
    p_type = Counter(t for t, _ in pairs)
    p_level = Counter(l for _, l in pairs)

    table: dict[tuple[str, str], float | None] = {}
    for t in sorted(p_type):
        for level in SALIENCE_LEVELS:
            c = joint.get((t, level), 0)
            if c == 0:
                table[(t, level)] = None
            else:
                table[(t, level)] = math.log(
                    (c / n) / ((p_type[t] / n) * (p_level[level] / n))
                )
    return table


def rank_types_by_pmi(
    table: Mapping[tuple[str, str], float | None], level: str = "high"
) -> list[tuple[str, float]]:
    """Question types with defined PMI at a level, most associated first."""
    rows = [(t, v) for (t, l), v in table.items() if l == level and v is not None]
    return sorted(rows, key=lambda r: (-r[1], r[0]))


# --------------------------------------------------------------------------
# Random correlation baseline
# --------------------------------------------------------------------------


def random_baseline_rho(
    salience: Sequence[float],
    answerability: Sequence[float],
    trials: int,
    seed: int,
) -> float:
    """Mean Spearman rho of salience against seeded permutations of the
    answerability series."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    total = 0.0
    perm = list(answerability)
    for _ in range(trials):
        rng.shuffle(perm)
        total += spearman_rho(PairedSeries.of(salience, perm)).rho
    return total / trials


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EvaluationReport:
    """Metric values plus enough provenance to reproduce them."""

    metrics: Mapping[str, float]
    dataset_hash: str
    providers: tuple[str, ...] = ()
    seed: int | None = None
    notes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for name, value in self.metrics.items():
            if not math.isfinite(float(value)):
                raise ValueError(f"metric {name!r} is not finite: {value}")
        if not self.dataset_hash:
            raise ValueError("dataset_hash is required provenance")

    def to_dict(self) -> dict:
        return {
            "metrics": {k: float(v) for k, v in sorted(self.metrics.items())},
            "provenance": {
                "dataset_hash": self.dataset_hash,
                "providers": list(self.providers),
                "seed": self.seed,
                "notes": dict(sorted(self.notes.items())),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
