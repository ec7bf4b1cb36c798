import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import cohen_kappa_score

from src.errors import NdtSelectError
from src.models.metrics import accuracy, agreement_table, cohens_kappa


def test_accuracy_example():
    assert accuracy([0, 1, 1, 0], [0, 1, 0, 0]) == 0.75


@pytest.mark.parametrize("a, b, expected", [
    ([0, 1, 0, 1], [0, 1, 0, 1], 1.0),
    ([0, 0, 1, 1], [0, 1, 0, 1], 0.0),
    ([0, 1, 0, 1], [1, 0, 1, 0], -1.0),
])
def test_kappa_examples(a, b, expected):
    assert cohens_kappa(a, b) == pytest.approx(expected, abs=1e-12)


def test_kappa_of_identical_constant_raters_is_one():
    assert cohens_kappa([2, 2, 2], [2, 2, 2]) == 1.0


def test_agreement_table_counts():
    table = agreement_table([0, 1, 1, 2], [0, 1, 2, 2], n_classes=4)
    assert table.counts.shape == (4, 4)
    assert table.counts.sum() == 4
    assert table.observed == 0.75
    with pytest.raises(NdtSelectError):
        agreement_table([0, 3], [0, 1], n_classes=2)


@pytest.mark.parametrize("bad", [
    ([0, 1], [0]),
    ([], []),
    ([0, -1], [0, 1]),
])
def test_metric_errors(bad):
    with pytest.raises(NdtSelectError):
        cohens_kappa(*bad)
    with pytest.raises(NdtSelectError):
        accuracy(*bad)


def test_uniform_marginals_identity():
    # при равномерных маргиналах p_e = 1/C, поэтому kappa = (C·p_o - 1)/(C - 1)
    a = np.array([0, 1, 2] * 4)
    b = np.array([0, 1, 2, 1, 2, 0, 0, 1, 2, 2, 0, 1])
    p_o = float(np.mean(a == b))
    assert cohens_kappa(a, b) == pytest.approx((3 * p_o - 1) / 2, abs=1e-12)


label_pairs = st.integers(2, 5).flatmap(
    lambda c: st.integers(1, 60).flatmap(
        lambda n: st.tuples(
            st.lists(st.integers(0, c - 1), min_size=n, max_size=n),
            st.lists(st.integers(0, c - 1), min_size=n, max_size=n),
            st.permutations(list(range(c))),
        )
    )
)


@settings(max_examples=1000, deadline=None)
@given(label_pairs)
def test_kappa_properties(pair):
    a, b, perm = pair
    a, b = np.array(a), np.array(b)
    kappa = cohens_kappa(a, b)
    assert -1.0 - 1e-12 <= kappa <= 1.0 + 1e-12
    assert cohens_kappa(b, a) == pytest.approx(kappa, abs=1e-12)
    perm = np.array(perm)
    assert cohens_kappa(perm[a], perm[b]) == pytest.approx(kappa, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(label_pairs)
def test_kappa_matches_sklearn(pair):
    a, b, _ = pair
    expected = cohen_kappa_score(a, b)
    if np.isnan(expected):
        # sklearn возвращает NaN, когда оба ряда - одна и та же константа
        assert cohens_kappa(a, b) == 1.0
    else:
        assert cohens_kappa(a, b) == pytest.approx(expected, abs=1e-9)
