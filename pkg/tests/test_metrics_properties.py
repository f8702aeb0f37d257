"""Property tests: every metric agrees with its definitional oracle on small
random instances, plus the structural invariances."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from inquest.errors import DegenerateDataError, UndefinedCorrelationError
from inquest.metrics import (
    PairedSeries,
    RatingMatrix,
    kendall_tau,
    krippendorff_alpha_ordinal,
    macro_f1,
    mae,
    spearman_rho,
)

from oracles import (
    alpha_ordinal_bruteforce,
    kendall_tau_b_bruteforce,
    macro_f1_bruteforce,
    mae_bruteforce,
    spearman_bruteforce,
)

ratings_cell = st.one_of(st.none(), st.integers(min_value=0, max_value=5))


@st.composite
def rating_matrices(draw):
    n_items = draw(st.integers(min_value=2, max_value=8))
    n_raters = draw(st.integers(min_value=2, max_value=4))
    rows = tuple(
        tuple(draw(ratings_cell) for _ in range(n_raters)) for _ in range(n_items)
    )
    return RatingMatrix(ratings=rows)


@st.composite
def paired(draw, min_size=2, max_size=8, lo=0, hi=5):
    n = draw(st.integers(min_value=min_size, max_value=max_size))
    xs = draw(st.lists(st.integers(lo, hi), min_size=n, max_size=n))
    ys = draw(st.lists(st.integers(lo, hi), min_size=n, max_size=n))
    return xs, ys


@settings(max_examples=250, deadline=None)
@given(rating_matrices())
def test_alpha_matches_bruteforce(matrix):
    rows = [list(r) for r in matrix.ratings]
    try:
        expected = alpha_ordinal_bruteforce(rows)
    except ValueError:
        with pytest.raises(DegenerateDataError):
            krippendorff_alpha_ordinal(matrix)
        return
    assert krippendorff_alpha_ordinal(matrix) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=250, deadline=None)
@given(rating_matrices())
def test_alpha_row_permutation_invariance(matrix):
    rng = random.Random(0)
    rows = list(matrix.ratings)
    rng.shuffle(rows)
    shuffled = RatingMatrix(ratings=tuple(rows))
    try:
        original = krippendorff_alpha_ordinal(matrix)
    except DegenerateDataError:
        return
    assert krippendorff_alpha_ordinal(shuffled) == pytest.approx(original, abs=1e-9)


@settings(max_examples=250, deadline=None)
@given(rating_matrices())
def test_alpha_label_reversal_invariance(matrix):
    flipped = RatingMatrix(
        ratings=tuple(
            tuple(None if v is None else 5 - v for v in row) for row in matrix.ratings
        )
    )
    try:
        original = krippendorff_alpha_ordinal(matrix)
    except DegenerateDataError:
        return
    assert krippendorff_alpha_ordinal(flipped) == pytest.approx(original, abs=1e-9)


@settings(max_examples=250, deadline=None)
@given(paired(min_size=3))
def test_spearman_matches_bruteforce(data):
    xs, ys = data
    try:
        expected = spearman_bruteforce(xs, ys)
    except ValueError:
        with pytest.raises(UndefinedCorrelationError):
            spearman_rho(PairedSeries.of(xs, ys))
        return
    result = spearman_rho(PairedSeries.of(xs, ys))
    assert result.rho == pytest.approx(expected, abs=1e-12)
    assert -1.0 <= result.rho <= 1.0


@settings(max_examples=250, deadline=None)
@given(paired())
def test_kendall_matches_bruteforce(data):
    xs, ys = data
    try:
        expected = kendall_tau_b_bruteforce(xs, ys)
    except ValueError:
        with pytest.raises(UndefinedCorrelationError):
            kendall_tau(PairedSeries.of(xs, ys))
        return
    tau = kendall_tau(PairedSeries.of(xs, ys))
    assert tau == pytest.approx(expected, abs=1e-12)
    assert -1.0 <= tau <= 1.0


@settings(max_examples=250, deadline=None)
@given(paired())
def test_mae_matches_bruteforce_and_is_nonnegative(data):
    xs, ys = data
    value = mae(PairedSeries.of(xs, ys))
    assert value == pytest.approx(mae_bruteforce(xs, ys), abs=1e-12)
    assert value >= 0.0
    assert (value == 0.0) == (xs == ys)


@settings(max_examples=250, deadline=None)
@given(paired(lo=1, hi=5))
def test_macro_f1_matches_bruteforce(data):
    pred, gold = data
    labels = list(range(1, 6))
    assert macro_f1(pred, gold, labels) == pytest.approx(
        macro_f1_bruteforce(pred, gold, labels), abs=1e-12
    )
