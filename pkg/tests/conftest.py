import numpy as np
import pytest

from miagrid import Architecture, DataSpec, SearchSpace, sample_population


@pytest.fixture
def two_class_spec():
    # separable regime: orthogonal class means 6 apart, unit noise
    return DataSpec(dim=8, classes=2, class_separation=6.0, noise_sigma=1.0, seed=101)


@pytest.fixture
def two_class_set(two_class_spec):
    return sample_population(two_class_spec, 200, stream="fixture")


@pytest.fixture
def linear_arch(two_class_spec):
    return Architecture("linear", two_class_spec.dim, two_class_spec.classes)


@pytest.fixture
def small_space():
    return SearchSpace(trials=4, epochs=10)


def assert_sets_equal(a, b):
    np.testing.assert_array_equal(a.ids, b.ids)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.features, b.features)
