"""Synthetic classification population and grid membership structure.

The population is a seeded Gaussian mixture: one mean per class, placed at
pairwise distance ~``class_separation`` and rotated by a seeded orthogonal
matrix, with isotropic within-class noise. Sample identities are 64-bit
integers partitioned into namespaces so that externally drawn datasets can
never collide with the grid pool:

    pool ids      in [0, 2**48)
    external ids  in [2**48, 2**49)
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .seeding import rng_for, stable_seed

POOL_ID_BASE = 0
EXTERNAL_ID_BASE = 1 << 48
_ID_SPAN = 1 << 48

# stream label reserved for the grid pool; external draws must not reuse it
POOL_STREAM = "pool"


@dataclass(frozen=True)
class DataSpec:
    """Parameters of the data-generating distribution."""

    dim: int
    classes: int
    class_separation: float
    noise_sigma: float
    seed: int

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.classes < 2:
            raise ConfigError(f"classes must be >= 2, got {self.classes}")
        if not self.noise_sigma > 0:
            raise ConfigError(f"noise_sigma must be > 0, got {self.noise_sigma}")
        if not self.class_separation > 0:
            raise ConfigError(
                f"class_separation must be > 0, got {self.class_separation}"
            )


class LabeledSet:
    """Feature/label/sample-id arrays with aligned rows."""

    __slots__ = ("features", "labels", "ids")

    def __init__(self, features, labels, ids):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        ids = np.asarray(ids, dtype=np.int64)
        if features.ndim != 2 or len(features) != len(labels) != len(ids):
            raise ConfigError("features, labels, and ids must have matching length")
        if len(np.unique(ids)) != len(ids):
            raise ConfigError("sample ids must be unique within a set")
        self.features = features
        self.labels = labels
        self.ids = ids

    def __len__(self):
        return len(self.labels)

    def subset(self, index) -> "LabeledSet":
        return LabeledSet(self.features[index], self.labels[index], self.ids[index])


@dataclass
class MembershipMask:
    """Row i marks which pool samples belong to grid dataset i."""

    mask: np.ndarray  # (M+1, n_pool) bool
    pool_ids: np.ndarray

    @property
    def rows(self) -> int:
        return self.mask.shape[0]


def class_means(spec: DataSpec) -> np.ndarray:
    """Deterministic (classes, dim) mean matrix for the mixture.

    Uses an orthogonal frame (exact pairwise distance) whenever the class
    count permits, otherwise seeded unit directions maximizing the minimum
    pairwise distance over a fixed number of draws. A seeded rotation makes
    the arrangement depend on the spec seed without changing distances.
    """
    radius = spec.class_separation / np.sqrt(2.0)
    frame = np.zeros((spec.classes, spec.dim))
    if spec.classes <= 2 * spec.dim:
        for c in range(spec.classes):
            axis, sign = divmod(c, 2)
            frame[c, axis] = radius if sign == 0 else -radius
    else:
        rng = rng_for(spec.seed, "class-means")
        best, best_score = None, -np.inf
        for _ in range(64):
            cand = rng.standard_normal((spec.classes, spec.dim))
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            dists = np.linalg.norm(cand[:, None] - cand[None, :], axis=-1)
            score = dists[~np.eye(spec.classes, dtype=bool)].min()
            if score > best_score:
                best, best_score = cand, score
        frame = best * radius
    rot = rng_for(spec.seed, "rotation").standard_normal((spec.dim, spec.dim))
    q, r = np.linalg.qr(rot)
    q *= np.sign(np.diag(r))
    return frame @ q.T


def _draw(spec: DataSpec, n: int, rng: np.random.Generator, id_base: int) -> LabeledSet:
    means = class_means(spec)
    labels = rng.integers(0, spec.classes, size=n)
    features = means[labels] + spec.noise_sigma * rng.standard_normal((n, spec.dim))
    return LabeledSet(features, labels, id_base + np.arange(n, dtype=np.int64))


def sample_population(spec: DataSpec, n: int, stream: str = POOL_STREAM) -> LabeledSet:
    """Draw n i.i.d. samples; distinct stream labels give independent draws."""
    if n < 1:
        raise ConfigError(f"population draw needs n >= 1, got {n}")
    base = POOL_ID_BASE + stable_seed(spec.seed, "ids", stream) % (_ID_SPAN - n)
    return _draw(spec, n, rng_for(spec.seed, "population", stream), base)


def sample_external_datasets(
    spec: DataSpec, count: int, sizes, stream: str = "external"
) -> list[LabeledSet]:
    """Draw `count` fresh sets with ids disjoint from every pool id."""
    if count < 1:
        raise ConfigError(f"external draw needs count >= 1, got {count}")
    if stream.startswith(POOL_STREAM):
        raise ConfigError(
            f"stream {stream!r} collides with the pool namespace; pick another label"
        )
    if np.isscalar(sizes):
        sizes = [int(sizes)] * count
    if len(sizes) != count:
        raise ConfigError(f"expected {count} sizes, got {len(sizes)}")
    sets = []
    for i, n in enumerate(sizes):
        if n < 1:
            raise ConfigError(f"external set {i} needs size >= 1, got {n}")
        base = EXTERNAL_ID_BASE + stable_seed(spec.seed, "ids-ext", stream, i) % (
            _ID_SPAN - n
        )
        sets.append(_draw(spec, n, rng_for(spec.seed, "external", stream, i), base))
    return sets


def build_grid_datasets(pool: LabeledSet, M: int, seed: int) -> MembershipMask:
    """Draw the (M+1) x |pool| membership mask with inclusion probability 0.5."""
    if len(pool) == 0:
        raise ConfigError("pool must be non-empty")
    if M < 1:
        raise ConfigError(f"M must be >= 1, got {M}")
    mask = rng_for(seed, "mask").random((M + 1, len(pool))) < 0.5
    return MembershipMask(mask=mask, pool_ids=pool.ids.copy())
