import numpy as np
import pytest
from scipy import stats as sps
from sklearn.linear_model import LogisticRegression

from miagrid import (
    ConfigError,
    DataSpec,
    build_grid_datasets,
    sample_external_datasets,
    sample_population,
)
from miagrid.synthdata import EXTERNAL_ID_BASE, class_means
from tests.conftest import assert_sets_equal


def test_invalid_specs_rejected():
    with pytest.raises(ConfigError):
        DataSpec(dim=0, classes=2, class_separation=1.0, noise_sigma=1.0, seed=0)
    with pytest.raises(ConfigError):
        DataSpec(dim=4, classes=1, class_separation=1.0, noise_sigma=1.0, seed=0)
    with pytest.raises(ConfigError):
        DataSpec(dim=4, classes=2, class_separation=1.0, noise_sigma=0.0, seed=0)


def test_empty_request_rejected(two_class_spec):
    with pytest.raises(ConfigError):
        sample_population(two_class_spec, 0)


def test_population_deterministic(two_class_spec):
    a = sample_population(two_class_spec, 50, stream="s1")
    b = sample_population(two_class_spec, 50, stream="s1")
    assert_sets_equal(a, b)


def test_streams_differ(two_class_spec):
    a = sample_population(two_class_spec, 50, stream="s1")
    b = sample_population(two_class_spec, 50, stream="s2")
    assert not np.array_equal(a.features, b.features)


def test_class_means_pairwise_distance():
    # orthogonal frame regime: distances are exactly the separation
    spec = DataSpec(dim=8, classes=6, class_separation=5.0, noise_sigma=1.0, seed=3)
    means = class_means(spec)
    dists = np.linalg.norm(means[:, None] - means[None, :], axis=-1)
    off = dists[~np.eye(6, dtype=bool)]
    assert off.min() >= 5.0 - 1e-9


def test_population_linearly_separable():
    # held-out linear classifier fit on half the draw reaches 95 percent
    spec = DataSpec(dim=8, classes=10, class_separation=6.0, noise_sigma=1.0, seed=0)
    pool = sample_population(spec, 10_000, stream="sep-check")
    clf = LogisticRegression(max_iter=2000)
    clf.fit(pool.features[:5000], pool.labels[:5000])
    acc = clf.score(pool.features[5000:], pool.labels[5000:])
    assert acc >= 0.95


def test_mask_shape_and_determinism(two_class_spec):
    pool = sample_population(two_class_spec, 4)
    mask = build_grid_datasets(pool, 1, seed=5)
    assert mask.mask.shape == (2, 4)
    again = build_grid_datasets(pool, 1, seed=5)
    np.testing.assert_array_equal(mask.mask, again.mask)


def test_mask_preconditions(two_class_spec):
    pool = sample_population(two_class_spec, 4)
    with pytest.raises(ConfigError):
        build_grid_datasets(pool, 0, seed=5)


def test_mask_inclusion_band():
    # exact Binomial(128, 0.5) band with two-sided tail mass <= 1e-9;
    # the oracle computes the band, then every pooled sample must sit inside
    lo, hi = None, None
    for t in range(1, 64):
        tail = sps.binom.cdf(64 - t - 1, 128, 0.5) + sps.binom.sf(64 + t, 128, 0.5)
        if tail <= 1e-9:
            lo, hi = 64 - t, 64 + t
            break
    assert (lo, hi) == (30, 98)
    spec = DataSpec(dim=4, classes=2, class_separation=4.0, noise_sigma=1.0, seed=9)
    pool = sample_population(spec, 2000)
    mask = build_grid_datasets(pool, 127, seed=17)
    counts = mask.mask.sum(axis=0)
    assert counts.min() >= lo and counts.max() <= hi


def test_mask_marginal_near_half():
    spec = DataSpec(dim=4, classes=2, class_separation=4.0, noise_sigma=1.0, seed=9)
    pool = sample_population(spec, 2000)
    mask = build_grid_datasets(pool, 127, seed=17)
    assert abs(mask.mask.mean() - 0.5) < 0.01


def test_external_disjoint_ids(two_class_spec):
    pool = sample_population(two_class_spec, 300)
    externals = sample_external_datasets(two_class_spec, 5, sizes=150)
    pool_ids = set(pool.ids.tolist())
    for ext in externals:
        assert ext.ids.min() >= EXTERNAL_ID_BASE
        assert pool_ids.isdisjoint(ext.ids.tolist())


def test_external_stream_collision_rejected(two_class_spec):
    with pytest.raises(ConfigError):
        sample_external_datasets(two_class_spec, 1, sizes=10, stream="pool")


def test_external_distribution_matches_pool(two_class_spec):
    # per-coordinate mean of 100 external draws within 3 SEs of the pool mean
    pool = sample_population(two_class_spec, 5000)
    externals = sample_external_datasets(two_class_spec, 100, sizes=100)
    ext_feats = np.vstack([e.features for e in externals])
    se = np.sqrt(
        pool.features.var(axis=0) / len(pool)
        + ext_feats.var(axis=0) / len(ext_feats)
    )
    gap = np.abs(ext_feats.mean(axis=0) - pool.features.mean(axis=0))
    assert (gap <= 3 * se).all()


def test_subset_roundtrip(two_class_set):
    idx = np.arange(len(two_class_set)) % 3 == 0
    sub = two_class_set.subset(idx)
    assert len(sub) == idx.sum()
    np.testing.assert_array_equal(sub.ids, two_class_set.ids[idx])
