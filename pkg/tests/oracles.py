"""Brute-force definitional implementations used only to check the library.

Each oracle is written straight from the textbook definition with explicit
enumeration, independently of the package's algorithms, so agreement between
the two is meaningful.
"""

from __future__ import annotations

import math
from collections import Counter
from itertools import combinations


def ordinal_delta_sq(c: int, k: int, margins: dict[int, float]) -> float:
    """Squared ordinal distance between two rating values given the
    coincidence margins of all observed values."""
    lo, hi = min(c, k), max(c, k)
    mass = sum(m for v, m in margins.items() if lo <= v <= hi)
    d = mass - (margins[lo] + margins[hi]) / 2.0
    return d * d


def alpha_ordinal_bruteforce(rows: list[list[int | None]]) -> float:
    """Krippendorff's ordinal alpha by explicit pair enumeration.

    Observed disagreement averages the squared ordinal distance over every
    ordered pair of ratings inside each pairable unit, weighted 1/(m_u - 1);
    expected disagreement averages it over every ordered pair of ratings
    drawn without replacement from the pooled values.
    """
    units = [[v for v in row if v is not None] for row in rows]
    units = [u for u in units if len(u) >= 2]
    if not units:
        raise ValueError("no pairable units")

    pooled = [v for u in units for v in u]
    margins = {v: float(c) for v, c in Counter(pooled).items()}
    n = len(pooled)

    obs = 0.0
    for u in units:
        m = len(u)
        for i in range(m):
            for j in range(m):
                if i != j:
                    obs += ordinal_delta_sq(u[i], u[j], margins) / (m - 1)
    obs /= n

    exp = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                exp += ordinal_delta_sq(pooled[i], pooled[j], margins)
    exp /= n * (n - 1)

    if exp == 0.0:
        if obs == 0.0:
            return 1.0
        raise ValueError("zero expected disagreement with nonzero observed")
    return 1.0 - obs / exp


def ranks_bruteforce(xs: list[float]) -> list[float]:
    """Mid-ranks computed by counting, not sorting: rank(x) = (number of
    values strictly below x) + (1 + number of values equal to x) / 2."""
    ranks = []
    for x in xs:
        below = sum(1 for y in xs if y < x)
        equal = sum(1 for y in xs if y == x)
        ranks.append(below + (1 + equal) / 2.0)
    return ranks


def spearman_bruteforce(xs: list[float], ys: list[float]) -> float:
    rx = ranks_bruteforce(xs)
    ry = ranks_bruteforce(ys)
    n = len(xs)
    mx = sum(rx) / n
    my = sum(ry) / n
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    if den == 0:
        raise ValueError("zero rank variance")
    return num / den


def kendall_tau_b_bruteforce(xs: list[float], ys: list[float]) -> float:
    """Tau-b from the four pair classes enumerated over all index pairs."""
    concordant = discordant = 0
    untied_x = untied_y = 0
    for (i, j) in combinations(range(len(xs)), 2):
        dx = xs[i] - xs[j]
        dy = ys[i] - ys[j]
        if dx != 0:
            untied_x += 1
        if dy != 0:
            untied_y += 1
        if dx * dy > 0:
            concordant += 1
        elif dx * dy < 0:
            discordant += 1
    if untied_x == 0 or untied_y == 0:
        raise ValueError("a series is fully tied")
    return (concordant - discordant) / math.sqrt(untied_x * untied_y)


def mae_bruteforce(xs: list[float], ys: list[float]) -> float:
    return sum(abs(a - b) for a, b in zip(xs, ys)) / len(xs)


def macro_f1_bruteforce(pred: list[int], gold: list[int], labels: list[int]) -> float:
    """Macro F1 from per-label confusion counts, written out longhand."""
    f1s = []
    for label in labels:
        tp = fp = fn = 0
        for p, g in zip(pred, gold):
            if p == label and g == label:
                tp += 1
            elif p == label:
                fp += 1
            elif g == label:
                fn += 1
        if tp == 0:
            f1s.append(0.0)
        else:
            precision = tp / (tp + fp)
            recall = tp / (tp + fn)
            f1s.append(2 * precision * recall / (precision + recall))
    return sum(f1s) / len(labels)


def knn_per_label_bruteforce(
    query: list[float],
    bank: list[tuple[str, int, list[float]]],
) -> dict[int, str]:
    """Exhaustive nearest exemplar per label; entries are (id, label, vector).
    Distance ties break toward the smallest id."""
    best: dict[int, tuple[float, str]] = {}
    for exemplar_id, label, vector in bank:
        dist = math.sqrt(sum((a - b) ** 2 for a, b in zip(query, vector)))
        if label not in best or (dist, exemplar_id) < best[label]:
            best[label] = (dist, exemplar_id)
    return {label: exemplar_id for label, (_, exemplar_id) in best.items()}
