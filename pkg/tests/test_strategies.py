import numpy as np
import pytest

from tropiprune import (AdapterLayer, ParamIndex, PruneMask, PruneScope,
                        apply_mask, combined_select, forward, select_smallest,
                        standard_mask, tropical_mask)

CB, CU, CN = PruneScope.CLASS_BLIND, PruneScope.CLASS_UNIFORM, PruneScope.NODE_WISE


def layer_from(down, up):
    return AdapterLayer(np.array(down, dtype=float), np.array(up, dtype=float))


def random_layer(rng, d=4, r=2):
    return AdapterLayer(rng.normal(size=(r, d + 1)), rng.normal(size=(d, r)))


def test_scope_tokens():
    assert PruneScope.from_token("cb") is CB
    assert PruneScope.from_token("CN") is CN
    with pytest.raises(ValueError):
        PruneScope.from_token("layerwise")


def test_select_empty_and_full():
    rng = np.random.default_rng(0)
    layers = [random_layer(rng)]
    total = layers[0].param_count
    for scope in (CB, CU, CN):
        assert select_smallest(layers, 0.0, scope) == set()
        assert len(select_smallest(layers, 1.0, scope)) == total
    with pytest.raises(ValueError):
        select_smallest(layers, 1.5, CB)


def test_select_smallest_by_magnitude():
    # values 3, -1, 0.5, -2 pooled: the two smallest magnitudes are 0.5 and -1
    layer = layer_from([[3.0, -1.0, 0.5, -2.0]], [[0.0], [0.0], [0.0]])
    picked = select_smallest([layer], 4 / 7, CB)
    # bottom four of seven: the three zero up-entries plus |0.5|... restrict to down
    down_picked = {i for i in picked if i.matrix == "down"}
    assert down_picked == {ParamIndex(0, "down", 0, 2)}
    picked = select_smallest([layer], 5 / 7, CB)
    down_picked = {i for i in picked if i.matrix == "down"}
    assert down_picked == {ParamIndex(0, "down", 0, 1), ParamIndex(0, "down", 0, 2)}


def test_select_tie_break_is_index_order():
    layer = layer_from([[1.0, 1.0, 1.0]], [[1.0], [1.0]])
    picked = select_smallest([layer], 2 / 5, CB)
    assert picked == {ParamIndex(0, "down", 0, 0), ParamIndex(0, "down", 0, 1)}


def test_scope_grouping():
    big = layer_from([[10.0, 10.0, 5.0]], [[10.0], [10.0]])
    small = layer_from([[0.2, 0.2, 0.3]], [[0.2], [0.2]])
    # class-blind pools everything: the four smallest live in the second layer
    blind = select_smallest([big, small], 4 / 10, CB)
    assert all(i.layer == 1 for i in blind)
    # per-layer keeps the split even: two from each
    uniform = select_smallest([big, small], 2 / 5, CU)
    assert sum(1 for i in uniform if i.layer == 0) == 2
    assert sum(1 for i in uniform if i.layer == 1) == 2


def test_node_wise_groups_are_rows():
    down = [[1.0, 9.0, 9.0], [9.0, 1.0, 9.0]]
    up = [[1.0, 9.0], [9.0, 1.0]]
    picked = select_smallest([layer_from(down, up)], 1 / 3, CN)
    # every row group of three... down rows have 3 entries (floor 1 each),
    # up rows have 2 entries (floor 0)
    assert picked == {ParamIndex(0, "down", 0, 0), ParamIndex(0, "down", 1, 1)}


def test_node_wise_scale_invariance():
    rng = np.random.default_rng(3)
    layer = random_layer(rng)
    scaled = AdapterLayer(5.0 * layer.down, 5.0 * layer.up)
    for scope in (CU, CN):
        assert select_smallest([layer], 0.4, scope) == \
            select_smallest([scaled], 0.4, scope)


def test_tropical_mask_identical_rankings():
    rng = np.random.default_rng(5)
    layer = random_layer(rng)
    mask, p_hat = tropical_mask([layer], [layer], 0.5, CB)
    k = int(0.5 * layer.param_count)
    assert mask.count() == k
    assert p_hat == pytest.approx(k / layer.param_count)


def test_tropical_mask_disjoint_rankings():
    orig = layer_from([[1.0, 2.0, 10.0, 20.0]], [[30.0], [40.0], [50.0]])
    swapped = layer_from([[50.0, 40.0, 30.0, 20.0]], [[10.0], [2.0], [1.0]])
    mask, p_hat = tropical_mask([orig], [swapped], 2 / 7, CB)
    assert mask.count() == 0 and p_hat == 0.0


def test_tropical_mask_partial_agreement_toy():
    # rankings agree only on the up matrix entry; hand enumeration:
    #   original smallest: down(0,0)=1 and up(1,0)=0.5
    #   optimized smallest: down(0,1)=1 and up(1,0)=0.5
    orig = layer_from([[1.0, 10.0, 10.0], [10.0, 10.0, 10.0]],
                      [[10.0, 10.0], [0.5, 10.0]])
    opt = layer_from([[10.0, 1.0, 10.0], [10.0, 10.0, 10.0]],
                     [[10.0, 10.0], [0.5, 10.0]])
    mask, p_hat = tropical_mask([orig], [opt], 2 / 10, CB)
    assert mask.indices() == {ParamIndex(0, "up", 1, 0)}
    assert p_hat == pytest.approx(1 / 10)


def test_tropical_mask_shape_mismatch():
    rng = np.random.default_rng(7)
    with pytest.raises(ValueError):
        tropical_mask([random_layer(rng, d=4)], [random_layer(rng, d=5)], 0.5, CB)


def test_achieved_fraction_never_exceeds_requested():
    rng = np.random.default_rng(9)
    for _ in range(30):
        orig = random_layer(rng)
        opt = random_layer(rng)
        p = float(rng.uniform())
        scope = rng.choice([CB, CU, CN])
        mask, p_hat = tropical_mask([orig], [opt], p, scope)
        assert p_hat <= p + 1e-12
        assert mask.indices() <= select_smallest([orig], p, scope)


def test_achieved_fraction_monotone_in_requested():
    rng = np.random.default_rng(11)
    orig, opt = random_layer(rng), random_layer(rng)
    last = -1.0
    for p in np.linspace(0.0, 1.0, 21):
        _, p_hat = tropical_mask([orig], [opt], float(p), CU)
        assert p_hat >= last
        last = p_hat


def test_standard_mask_matches_selection():
    rng = np.random.default_rng(13)
    layer = random_layer(rng)
    mask = standard_mask([layer], 0.3, CU)
    assert mask.indices() == select_smallest([layer], 0.3, CU)
    assert standard_mask([layer], 0.0, CB).count() == 0


def test_standard_count_close_to_tropical_count():
    rng = np.random.default_rng(17)
    for scope, groups in ((CB, 1), (CU, 1), (CN, 7)):
        orig, opt = random_layer(rng, d=4, r=3), random_layer(rng, d=4, r=3)
        trop, p_hat = tropical_mask([orig], [opt], 0.6, scope)
        std = standard_mask([orig], p_hat, scope)
        assert abs(std.count() - trop.count()) <= groups


def test_per_layer_counts_follow_floor():
    rng = np.random.default_rng(19)
    layers = [random_layer(rng, d=3, r=2), random_layer(rng, d=5, r=2)]
    p = 0.37
    mask = standard_mask(layers, p, CU)
    for i, layer in enumerate(layers):
        got = sum(1 for idx in mask.indices() if idx.layer == i)
        assert abs(got - int(p * layer.param_count)) <= 1


def test_apply_mask():
    rng = np.random.default_rng(21)
    layer = random_layer(rng)
    empty = PruneMask.from_indices([layer], [])
    copy = apply_mask([layer], empty)[0]
    assert np.array_equal(copy.down, layer.down) and np.array_equal(copy.up, layer.up)

    full = standard_mask([layer], 1.0, CB)
    zeroed = apply_mask([layer], full)[0]
    assert np.all(zeroed.down == 0.0) and np.all(zeroed.up == 0.0)

    partial = standard_mask([layer], 0.4, CB)
    pruned = apply_mask([layer], partial)[0]
    for idx in partial.indices():
        mat = pruned.down if idx.matrix == "down" else pruned.up
        assert mat[idx.row, idx.col] == 0.0
    kept = ~partial.entries[0][0]
    assert np.array_equal(pruned.down[kept], layer.down[kept])
    # originals untouched
    assert not np.all(layer.down == 0.0)


def test_apply_mask_then_forward_is_finite():
    rng = np.random.default_rng(23)
    for _ in range(10):
        layer = random_layer(rng)
        mask = standard_mask([layer], float(rng.uniform()), CN)
        pruned = apply_mask([layer], mask)[0]
        x = rng.normal(size=layer.width)
        assert np.all(np.isfinite(forward(pruned, x, residual=True)))


def test_combined_select():
    assert combined_select(0.70, 0.75) == "tropical"
    assert combined_select(0.80, 0.60) == "standard"
    assert combined_select(0.70, 0.70) == "tropical"
