import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import spearmanr

from src.errors import CompileError, DimensionError, NdtSelectError
from src.models.cart import DecisionTree, Leaf, SplitNode, fit_tree, leaf_ref, predict_tree_batch
from src.models.ndt import (
    compile_tree,
    forward,
    forward_batch,
    gamma_link,
    log_link,
    params_from_dict,
    params_to_dict,
    predict,
)
from src.selection.model import default_gamma_grid

CRISP = 1e4


def _one_split_tree() -> DecisionTree:
    return DecisionTree(
        nodes=(SplitNode(0, 0, 0.5, leaf_ref(0), leaf_ref(1)),),
        leaves=(Leaf(0, (10, 0), 1, 0), Leaf(1, (0, 10), 1, 1)),
        root=0,
        training_size=20,
        n_features=1,
        n_classes=2,
    )


def _random_tree(seed, depth, n=300, d=3, n_classes=3):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2, 2, size=(n, d))
    y = rng.integers(0, n_classes, size=n)
    return fit_tree(X, y, n_classes, max_depth=depth), X


def _margin_ok(tree, X, margin=1e-3):
    ok = np.ones(X.shape[0], dtype=bool)
    for node in tree.nodes:
        ok &= np.abs(X[:, node.feature_index] - node.threshold) >= margin
    return ok


# --- compile ---

def test_compile_one_split_tree():
    params = compile_tree(_one_split_tree(), 1.0, 1.0)
    np.testing.assert_array_equal(params.W1, [[1.0]])
    np.testing.assert_array_equal(params.b1, [-0.5])
    np.testing.assert_array_equal(params.W2, [[-1.0, 1.0]])
    np.testing.assert_array_equal(params.b2, [-0.5, -0.5])
    np.testing.assert_array_equal(params.W3, [[0.5, 0.0], [0.0, 0.5]])
    np.testing.assert_array_equal(params.b3, [0.5, 0.5])


def test_compile_literal_output_layer():
    tree = DecisionTree(
        nodes=(SplitNode(0, 0, 0.5, leaf_ref(0), leaf_ref(1)),),
        leaves=(Leaf(0, (8, 2), 1, 0), Leaf(1, (1, 9), 1, 1)),
        root=0, training_size=20, n_features=1, n_classes=2,
    )
    params = compile_tree(tree, 1.0, 1.0, paper_literal_output=True)
    np.testing.assert_array_equal(params.W3, [[0.5, 0.0], [0.0, 0.5]])
    np.testing.assert_array_equal(params.b3, [0.0, 0.0])


def test_compile_invariants_on_random_tree():
    tree, _ = _random_tree(0, depth=5)
    params = compile_tree(tree, 2.0, 3.0)
    assert params.W1.shape == (3, tree.n_leaves - 1)
    assert (params.W1.sum(axis=0) == 1).all()
    assert set(np.unique(params.W1)) <= {0.0, 1.0}
    assert set(np.unique(params.W2)) <= {-1.0, 0.0, 1.0}
    path_lengths = np.array([leaf.path_length for leaf in tree.leaves])
    np.testing.assert_array_equal(np.abs(params.W2).sum(axis=0), path_lengths)
    np.testing.assert_array_equal(params.b2, -path_lengths + 0.5)
    for node in tree.nodes:
        assert params.b1[node.node_id] == -node.threshold
    assert params.W3.sum() == pytest.approx(1.0)
    assert params.seed_tree_id


def test_compile_degenerate_tree_fails():
    X = np.zeros((10, 2))
    tree = fit_tree(X, np.array([0, 1] * 5), 2, max_depth=3)
    with pytest.raises(CompileError, match="degenerate tree: nothing to relax"):
        compile_tree(tree, 1.0, 1.0)


def test_compile_rejects_non_positive_gamma():
    with pytest.raises(CompileError):
        compile_tree(_one_split_tree(), 0.0, 1.0)


# --- gamma_link ---

def test_gamma_link_values():
    assert gamma_link(7.0, "identity") == 7.0
    assert gamma_link(9.0, "sqrt") == 3.0
    assert gamma_link(900.0, "g") == pytest.approx(np.log10(10 ** 0.05 + 900.0), rel=1e-12)
    assert gamma_link(900.0, "h") == pytest.approx(0.61, abs=0.01)
    assert gamma_link(900.0) == gamma_link(900.0, "h")


def test_gamma_link_floor_is_exact():
    assert log_link(0.0) == 0.05


def test_h_shrinks_every_default_gamma():
    for gamma in default_gamma_grid():
        assert gamma_link(gamma, "h") < gamma


def test_gamma_link_errors():
    with pytest.raises(NdtSelectError):
        gamma_link(0.0)
    with pytest.raises(NdtSelectError):
        gamma_link(-1.0, "g")
    with pytest.raises(NdtSelectError):
        gamma_link(1.0, "cube")


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1e6))
def test_g_is_increasing_and_above_floor(x):
    assert gamma_link(x, "g") > 0.05
    assert gamma_link(x * 1.5, "g") > gamma_link(x, "g")


# --- forward / predict ---

def test_forward_one_split_crisp():
    params = compile_tree(_one_split_tree(), 100.0, 100.0)
    trace = forward(params, np.array([2.0]))
    assert trace.h1[0] == pytest.approx(1.0)
    np.testing.assert_allclose(trace.h2, [-1.0, 1.0], atol=1e-12)
    assert np.argmax(trace.scores) == 1
    assert trace.probabilities.sum() == pytest.approx(1.0)


def test_forward_on_threshold_gives_zero_activation():
    params = compile_tree(_one_split_tree(), 5.0, 5.0)
    assert forward(params, np.array([0.5])).h1[0] == 0.0


def test_tiny_gamma1_makes_output_input_independent():
    tree, X = _random_tree(1, depth=3)
    params = compile_tree(tree, 1e-9, 1.0)
    scores = forward_batch(params, X[:20]).scores
    np.testing.assert_allclose(scores, np.broadcast_to(scores[0], scores.shape), atol=1e-6)


def test_forward_ranges():
    tree, X = _random_tree(2, depth=4)
    trace = forward_batch(compile_tree(tree, 3.0, gamma_link(3.0)), X)
    assert (np.abs(trace.h1) <= 1).all() and (np.abs(trace.h2) <= 1).all()
    np.testing.assert_allclose(trace.probabilities.sum(axis=1), 1.0)
    assert (trace.probabilities > 0).all()


def test_forward_input_errors():
    params = compile_tree(_one_split_tree(), 1.0, 1.0)
    with pytest.raises(DimensionError):
        forward(params, np.array([1.0, 2.0]))
    with pytest.raises(NdtSelectError):
        forward(params, np.array([np.nan]))


def test_predict_tie_goes_to_lowest_class():
    params = compile_tree(_one_split_tree(), 1.0, 1.0)
    flat = params.with_arrays({**params.arrays(), "W3": np.zeros((2, 2)), "b3": np.array([0.5, 0.5])})
    assert predict(flat, np.array([[2.0], [-3.0]])).tolist() == [0, 0]
    lean = params.with_arrays({**params.arrays(), "W3": np.zeros((2, 2)), "b3": np.array([0.2, 0.8])})
    assert predict(lean, np.array([[2.0]])).tolist() == [1]


def test_predict_batch_equals_rowwise():
    tree, X = _random_tree(3, depth=4)
    params = compile_tree(tree, 2.0, gamma_link(2.0))
    rows = X[:100]
    expected = [int(np.argmax(forward(params, x).scores)) for x in rows]
    assert predict(params, rows).tolist() == expected


def test_params_dict_round_trip():
    tree, X = _random_tree(4, depth=3)
    params = compile_tree(tree, 9.0, gamma_link(9.0))
    restored = params_from_dict(params_to_dict(params))
    assert restored.gamma1 == params.gamma1 and restored.seed_tree_id == params.seed_tree_id
    np.testing.assert_array_equal(predict(restored, X), predict(params, X))
    with pytest.raises(CompileError):
        params_from_dict({"W1": [[1.0]]})


# --- crisp limit ---

@pytest.mark.parametrize("seed", range(50))
def test_crisp_limit_matches_seed_tree(seed):
    depth = 1 + seed % 6
    tree, X = _random_tree(seed, depth=depth)
    if tree.is_degenerate:
        pytest.skip("degenerate tree")
    rng = np.random.default_rng(seed + 1000)
    points = np.vstack([X, rng.uniform(-2.5, 2.5, size=(500, X.shape[1]))])
    points = points[_margin_ok(tree, points)]
    params = compile_tree(tree, CRISP, CRISP)
    tree_pred, _ = predict_tree_batch(tree, points)
    np.testing.assert_array_equal(predict(params, points), tree_pred)

    h2 = forward_batch(params, points).h2
    assert ((h2 > 0.99).sum(axis=1) == 1).all()
    assert ((h2 < -0.99).sum(axis=1) == tree.n_leaves - 1).all()


def test_disagreement_grows_as_gamma_decreases():
    rng = np.random.default_rng(0)
    X = rng.uniform(-2, 2, size=(400, 2))
    y = ((X[:, 0] > 0) & (X[:, 1] > 0)).astype(int)
    tree = fit_tree(X, y, 2, max_depth=2)
    points = rng.uniform(-2, 2, size=(1000, 2))
    tree_pred, _ = predict_tree_batch(tree, points)
    grid = list(default_gamma_grid())
    agreement = [
        np.mean(predict(compile_tree(tree, g, gamma_link(g)), points) == tree_pred)
        for g in grid
    ]
    rho, _ = spearmanr(grid, agreement)
    assert rho >= 0 or np.isnan(rho)
    assert agreement[0] >= agreement[-1]
