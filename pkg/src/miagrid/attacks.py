"""Likelihood-ratio membership attacks on a (dataset x hyperparameter) grid.

A grid holds M+1 datasets drawn from one pool with inclusion probability 0.5.
Diagonal models (dataset i, hypers i) are the audited targets; every other
row serves as a shadow. Four strategies assign shadow hyperparameters:

  lira       the target's own hypers on every shadow row
  acc        each shadow row gets hypers from HPO on its own dataset
  kl         one candidate, chosen to minimize the KL divergence between the
             target's and the shadow's score distributions, on every row
  threshold  no shadows; the raw target confidence is the score

Training goes through a content-addressed store, so repeated campaigns pay
only for missing cells. The per-target `models_trained` counter reproduces
the closed-form budgets: M for lira, M*T + M for acc, and
C*T + C*(N-1) + (M-N) for kl on an empty cache (the kl discount comes from
reusing each candidate's best HPO trial model as its first selection model).
"""

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import models as _models
from .errors import ConfigError, InsufficientShadowsError
from .hpo import HpoResult, SearchSpace, TrialRecord, run_hpo, split_train_val
from .models import Architecture, HyperParams, Model
from .seeding import rng_for, stable_seed
from .store import CellKey, Store, arch_digest, dataset_digest, hyper_digest
from .synthdata import (
    DataSpec,
    LabeledSet,
    MembershipMask,
    build_grid_datasets,
    sample_external_datasets,
    sample_population,
)

VAR_FLOOR = 1e-6

STRATEGIES = ("lira", "acc", "kl", "threshold")
VARIANCE_MODES = ("per_example", "global")


@dataclass(frozen=True)
class GaussianSummary:
    mean: float
    var: float
    count: int


def summarize(values, floor: float = VAR_FLOOR) -> GaussianSummary:
    """Moment summary of a score sample; population variance, floored."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InsufficientShadowsError(None, "cannot summarize an empty sample")
    return GaussianSummary(
        float(values.mean()), max(float(values.var()), floor), int(values.size)
    )


def log_gaussian_ratio(value: float, s_in: GaussianSummary, s_out: GaussianSummary) -> float:
    """Log of the IN/OUT Gaussian density ratio at `value`."""
    return float(
        -0.5 * np.log(s_in.var)
        - (value - s_in.mean) ** 2 / (2.0 * s_in.var)
        + 0.5 * np.log(s_out.var)
        + (value - s_out.mean) ** 2 / (2.0 * s_out.var)
    )


def lira_score(
    target_conf: float,
    in_scores,
    out_scores,
    variance_mode: str = "per_example",
    global_variance: tuple[float, float] | None = None,
) -> float:
    """Log-likelihood-ratio membership score for one sample.

    In per_example mode the variances come from the sample's own IN/OUT
    shadow scores; in global mode they are supplied (pooled across samples)
    while the means stay per-sample.
    """
    if variance_mode not in VARIANCE_MODES:
        raise ConfigError(f"unknown variance_mode {variance_mode!r}")
    s_in = summarize(in_scores)
    s_out = summarize(out_scores)
    if variance_mode == "global":
        if global_variance is None:
            raise ConfigError("global variance_mode needs global_variance")
        v_in, v_out = (max(float(v), VAR_FLOOR) for v in global_variance)
        s_in = GaussianSummary(s_in.mean, v_in, s_in.count)
        s_out = GaussianSummary(s_out.mean, v_out, s_out.count)
    return log_gaussian_ratio(target_conf, s_in, s_out)


def kl_divergence_gaussians(t: GaussianSummary, s: GaussianSummary) -> float:
    """KL(N_t || N_s) for univariate Gaussians."""
    if t.var < VAR_FLOOR or s.var < VAR_FLOOR:
        raise ConfigError("summaries must have variance >= the floor")
    ratio = t.var / s.var
    return 0.5 * ((s.mean - t.mean) ** 2 / s.var + ratio - np.log(ratio) - 1.0)


def phi_kl_scores(target_scores, shadow_scores) -> float:
    """KL between Gaussian fits of target and shadow score samples."""
    return kl_divergence_gaussians(summarize(target_scores), summarize(shadow_scores))


@dataclass
class KlSelection:
    selected: HyperParams
    index: int
    phi_means: np.ndarray


def kl_lira_select(
    arch: Architecture,
    candidates,
    shadow_sets,
    target_model: Model,
    seed: int,
    counter=None,
) -> KlSelection:
    """Pick the candidate whose shadow score distribution best matches the
    target's, averaged over the shadow sets (ties to the lowest index).

    With a single candidate the argmin is trivial and no shadows are trained.
    """
    candidates = list(candidates)
    shadow_sets = list(shadow_sets)
    if not candidates or not shadow_sets:
        raise ConfigError("kl_lira_select needs >= 1 candidate and >= 1 shadow set")
    if len(candidates) == 1:
        return KlSelection(candidates[0], 0, np.zeros(1))
    phi_means = np.empty(len(candidates))
    for j, cand in enumerate(candidates):
        phis = []
        for i, ds in enumerate(shadow_sets):
            shadow = _models.train(arch, ds, cand, stable_seed(seed, "kl-shadow", j, i))
            if counter is not None:
                counter.add(1)
            t_scores = _models.true_class_logit_scores(target_model, ds)
            s_scores = _models.true_class_logit_scores(shadow, ds)
            phis.append(phi_kl_scores(t_scores, s_scores))
        phi_means[j] = np.mean(phis)
    index = int(np.argmin(phi_means))
    return KlSelection(candidates[index], index, phi_means)


def acc_lira_hypers(
    arch: Architecture,
    shadow_sets,
    space: SearchSpace,
    dp,
    seed: int,
    counter=None,
) -> list[HyperParams]:
    """Independent HPO per shadow set; output order matches input order."""
    return [
        run_hpo(arch, ds, space, dp, stable_seed(seed, "acc", i), counter).best
        for i, ds in enumerate(shadow_sets)
    ]


@dataclass
class AttackResult:
    target_index: int
    strategy: str
    scores: np.ndarray
    is_member: np.ndarray
    models_trained: int
    sample_ids: np.ndarray


def threshold_attack(
    target_model: Model, pool: LabeledSet, is_member, target_index: int = 0
) -> AttackResult:
    """Shadow-model-free baseline: score = logit-scaled true-class confidence."""
    scores = _models.true_class_logit_scores(target_model, pool)
    return AttackResult(
        target_index,
        "threshold",
        scores,
        np.asarray(is_member, dtype=bool).copy(),
        0,
        pool.ids.copy(),
    )


class TrainCounter:
    """Thread-safe tally of model trainings."""

    def __init__(self):
        self._value = 0
        self._lock = threading.Lock()

    def add(self, k: int = 1):
        with self._lock:
            self._value += k

    @property
    def value(self) -> int:
        return self._value


@dataclass
class AttackParams:
    candidate_count: int = 4
    models_per_candidate: int = 2
    variance_mode: str = "per_example"
    candidate_hypers: list[HyperParams] | None = None

    def __post_init__(self):
        if self.variance_mode not in VARIANCE_MODES:
            raise ConfigError(f"unknown variance_mode {self.variance_mode!r}")
        if self.candidate_count < 1 or self.models_per_candidate < 1:
            raise ConfigError("candidate_count and models_per_candidate must be >= 1")


class MiaGrid:
    """The (M+1) x (M+1) model lattice with cached per-cell score vectors."""

    def __init__(self, spec, arch, pool, mask, space, dp, hpo_source, seed, store, counter=None):
        self.spec: DataSpec = spec
        self.arch: Architecture = arch
        self.pool: LabeledSet = pool
        self.mask: MembershipMask = mask
        self.space: SearchSpace = space
        self.dp = dp
        self.hpo_source = hpo_source
        self.seed = seed
        self.store: Store = store
        self.counter = counter if counter is not None else TrainCounter()
        self.row_hypers: list[HyperParams | None] = [None] * mask.rows
        self._arch_digest = arch_digest(arch)
        self._row_datasets: dict[int, LabeledSet] = {}
        self._row_digests: dict[int, str] = {}
        self._score_memo: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}

    @property
    def M(self) -> int:
        return self.mask.rows - 1

    def row_dataset(self, row: int) -> LabeledSet:
        if row not in self._row_datasets:
            self._row_datasets[row] = self.pool.subset(self.mask.mask[row])
        return self._row_datasets[row]

    def row_digest(self, row: int) -> str:
        if row not in self._row_digests:
            self._row_digests[row] = dataset_digest(self.row_dataset(row))
        return self._row_digests[row]

    def cell_seed(self, row: int, hypers: HyperParams) -> int:
        # strategy-independent, so identical cells coincide across attacks
        return stable_seed(self.seed, "cell", row, hyper_digest(hypers))

    def cell_key(self, row: int, hypers: HyperParams) -> CellKey:
        return CellKey(
            dataset_digest=self.row_digest(row),
            hyper_digest=hyper_digest(hypers),
            arch_digest=self._arch_digest,
            seed=self.cell_seed(row, hypers),
        )

    def _key_lock(self, digest: str) -> threading.Lock:
        with self._lock:
            return self._key_locks.setdefault(digest, threading.Lock())

    def ensure_cell(self, row: int, hypers: HyperParams) -> np.ndarray:
        """Pool score vector of cell (row, hypers), training it if missing."""
        key = self.cell_key(row, hypers)
        digest = key.digest()
        memo = self._score_memo.get(digest)
        if memo is not None:
            return memo
        with self._key_lock(digest):
            memo = self._score_memo.get(digest)
            if memo is not None:
                return memo
            scores = self.store.get_scores(key)
            if scores is None:
                model = self.store.get_model(key)
                if model is None:
                    model = _models.train(self.arch, self.row_dataset(row), hypers, key.seed)
                    self.counter.add(1)
                    self.store.put_model(key, model)
                scores = _models.true_class_logit_scores(model, self.pool)
                self.store.put_scores(key, scores)
            with self._lock:
                self._score_memo[digest] = scores
            return scores

    def scores_for_model(self, key: CellKey, model: Model) -> np.ndarray:
        """Pool score vector for an already-trained non-cell model."""
        digest = key.digest()
        memo = self._score_memo.get(digest)
        if memo is not None:
            return memo
        with self._key_lock(digest):
            scores = self.store.get_scores(key)
            if scores is None:
                scores = _models.true_class_logit_scores(model, self.pool)
                self.store.put_scores(key, scores)
            with self._lock:
                self._score_memo[digest] = scores
            return scores

    def target_pool_scores(self, target: int) -> np.ndarray:
        hypers = self.row_hypers[target]
        if hypers is None:
            raise ConfigError(f"row {target} was not built as a target (no hypers)")
        return self.ensure_cell(target, hypers)

    def target_model(self, target: int) -> Model:
        hypers = self.row_hypers[target]
        if hypers is None:
            raise ConfigError(f"row {target} was not built as a target (no hypers)")
        self.ensure_cell(target, hypers)
        return self.store.get_model(self.cell_key(target, hypers))

    def ensure_cells(self, items, jobs: int = 1):
        items = list(items)
        if jobs <= 1 or len(items) <= 1:
            for row, hypers in items:
                self.ensure_cell(row, hypers)
            return
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(lambda rh: self.ensure_cell(*rh), items))


def _hpo_record_name(grid: MiaGrid, ds_digest: str, seed: int) -> str:
    import hashlib

    h = hashlib.sha256()
    h.update(ds_digest.encode())
    h.update(repr(grid.space).encode())
    h.update(repr(grid.dp).encode())
    h.update(grid._arch_digest.encode())
    h.update(str(seed).encode())
    return h.hexdigest()


def _hypers_to_dict(h: HyperParams) -> dict:
    return {
        "learning_rate": h.learning_rate,
        "batch_size": h.batch_size,
        "epochs": h.epochs,
        "clip_norm": h.clip_norm,
        "noise_multiplier": h.noise_multiplier,
    }


def _hypers_from_dict(d: dict) -> HyperParams:
    return HyperParams(
        d["learning_rate"], d["batch_size"], d["epochs"],
        clip_norm=d["clip_norm"], noise_multiplier=d["noise_multiplier"],
    )


def cached_hpo(grid: MiaGrid, dataset: LabeledSet, seed: int) -> tuple[HpoResult, CellKey]:
    """Run (or replay) HPO for a dataset; the best-trial model is persisted
    so reruns train nothing. Returns the result and the best model's key."""
    ds_digest = dataset_digest(dataset)
    name = _hpo_record_name(grid, ds_digest, seed)
    record = grid.store.get_record("hpo", name)
    if record is not None:
        key = CellKey(**record["best_model_key"])
        trials = [
            TrialRecord(_hypers_from_dict(t), t["val_accuracy"], t["diverged"], t["note"])
            for t in record["trials"]
        ]
        result = HpoResult(
            trials[record["best_index"]].hypers,
            trials,
            record["best_index"],
            grid.store.get_model(key),
        )
        return result, key
    result = run_hpo(grid.arch, dataset, grid.space, grid.dp, seed, counter=grid.counter)
    train_split, _ = split_train_val(dataset, stable_seed(seed, "split"))
    key = CellKey(
        dataset_digest=dataset_digest(train_split),
        hyper_digest=hyper_digest(result.best),
        arch_digest=grid._arch_digest,
        seed=stable_seed(seed, "fit", result.best_index),
    )
    grid.store.put_model(key, result.best_model)
    grid.store.put_record(
        "hpo",
        name,
        {
            "best_index": result.best_index,
            "best_model_key": {
                "dataset_digest": key.dataset_digest,
                "hyper_digest": key.hyper_digest,
                "arch_digest": key.arch_digest,
                "seed": key.seed,
            },
            "trials": [
                dict(
                    _hypers_to_dict(t.hypers),
                    val_accuracy=t.val_accuracy,
                    diverged=t.diverged,
                    note=t.note,
                )
                for t in result.trials
            ],
        },
    )
    return result, key


def build_grid(
    store: Store,
    spec: DataSpec,
    arch: Architecture,
    M: int,
    pool_size: int,
    space: SearchSpace,
    dp=None,
    hpo_source: str = "td",
    seed: int = 0,
    target_rows=None,
    counter: TrainCounter | None = None,
    hpo_stream: str = "grid-hpo",
) -> MiaGrid:
    """Assemble pool, membership mask, per-row HPO, and diagonal targets.

    hpo_source "td" tunes each target on its own training dataset; "ed" tunes
    on a same-size external dataset with a disjoint id namespace. The
    hpo_stream label separates the defender's HPO randomness from attacks.
    """
    if hpo_source not in ("td", "ed"):
        raise ConfigError(f"hpo_source must be 'td' or 'ed', got {hpo_source!r}")
    pool = sample_population(spec, pool_size)
    mask = build_grid_datasets(pool, M, stable_seed(seed, "grid-mask"))
    grid = MiaGrid(spec, arch, pool, mask, space, dp, hpo_source, seed, store, counter)
    rows = list(range(M + 1)) if target_rows is None else sorted(set(target_rows))
    if hpo_source == "ed":
        sizes = [max(int(mask.mask[i].sum()), 10) for i in range(M + 1)]
        externals = sample_external_datasets(spec, M + 1, sizes, stream="ed")
    for i in rows:
        if not 0 <= i <= M:
            raise ConfigError(f"target row {i} outside grid of {M + 1} rows")
        hpo_input = externals[i] if hpo_source == "ed" else grid.row_dataset(i)
        result, _ = cached_hpo(grid, hpo_input, stable_seed(seed, hpo_stream, i))
        grid.row_hypers[i] = result.best
        grid.ensure_cell(i, result.best)
    return grid


def estimate_in_out(
    grid: MiaGrid, sample_id: int, assignment: dict[int, HyperParams]
) -> tuple[GaussianSummary, GaussianSummary]:
    """Split the shadow scores of one sample by its membership mask."""
    pos = np.nonzero(grid.mask.pool_ids == sample_id)[0]
    if len(pos) != 1:
        raise ConfigError(f"sample id {sample_id} not in the pool")
    pos = int(pos[0])
    in_vals, out_vals = [], []
    for row in sorted(assignment):
        value = grid.ensure_cell(row, assignment[row])[pos]
        (in_vals if grid.mask.mask[row, pos] else out_vals).append(value)
    if not in_vals or not out_vals:
        raise InsufficientShadowsError(sample_id)
    return summarize(in_vals), summarize(out_vals)


def _score_target(
    grid: MiaGrid,
    target: int,
    assignment: dict[int, HyperParams],
    score_overrides: dict[int, np.ndarray],
    variance_mode: str,
    jobs: int = 1,
) -> np.ndarray:
    """Vectorized per-sample log likelihood ratios for one target."""
    rows = sorted(assignment)
    grid.ensure_cells(
        ((r, assignment[r]) for r in rows if r not in score_overrides), jobs
    )
    shadow = np.vstack(
        [
            score_overrides[r] if r in score_overrides else grid.ensure_cell(r, assignment[r])
            for r in rows
        ]
    )
    member = grid.mask.mask[rows]
    t_scores = grid.target_pool_scores(target)

    cnt_in = member.sum(axis=0)
    cnt_out = len(rows) - cnt_in
    sum_in = (shadow * member).sum(axis=0)
    sum_out = shadow.sum(axis=0) - sum_in
    sq_in = (shadow**2 * member).sum(axis=0)
    sq_out = (shadow**2).sum(axis=0) - sq_in

    if variance_mode == "per_example":
        lacking = (cnt_in == 0) | (cnt_out == 0)
        if lacking.any():
            missing = int(grid.mask.pool_ids[np.argmax(lacking)])
            raise InsufficientShadowsError(missing)
        mean_in = sum_in / cnt_in
        mean_out = sum_out / cnt_out
        var_in = np.maximum(sq_in / cnt_in - mean_in**2, VAR_FLOOR)
        var_out = np.maximum(sq_out / cnt_out - mean_out**2, VAR_FLOOR)
    else:
        all_in = shadow[member]
        all_out = shadow[~member]
        if all_in.size == 0 or all_out.size == 0:
            raise InsufficientShadowsError(
                None, "mask has no IN or no OUT entries at all"
            )
        # global variances; per-sample means fall back to the pooled mean
        # when a sample has no shadows on one side (only possible at tiny M)
        var_in = max(float(all_in.var()), VAR_FLOOR)
        var_out = max(float(all_out.var()), VAR_FLOOR)
        mean_in = np.where(
            cnt_in > 0, sum_in / np.maximum(cnt_in, 1), float(all_in.mean())
        )
        mean_out = np.where(
            cnt_out > 0, sum_out / np.maximum(cnt_out, 1), float(all_out.mean())
        )
    return (
        -0.5 * np.log(var_in)
        - (t_scores - mean_in) ** 2 / (2.0 * var_in)
        + 0.5 * np.log(var_out)
        + (t_scores - mean_out) ** 2 / (2.0 * var_out)
    )


def _kl_assignment(grid: MiaGrid, target: int, params: AttackParams, seed: int):
    """Candidate HPO, KL-based selection, and the winning assignment.

    Each HPO-sourced candidate reuses its best trial model as the selection
    model (and later the shadow) for its own row, which is what makes the
    budget C*T + C*(N-1) + (M-N) instead of C*T + C*N + M.
    """
    M = grid.M
    n_sel = params.models_per_candidate
    if n_sel > M:
        raise ConfigError(f"models_per_candidate {n_sel} exceeds shadow count {M}")
    if params.candidate_hypers is not None:
        candidates = list(params.candidate_hypers)
        candidate_rows = None
        hpo_keys = None
    else:
        if params.candidate_count > M:
            raise ConfigError(
                f"candidate_count {params.candidate_count} exceeds shadow count {M}"
            )
        perm = rng_for(seed, "kl-seeds").permutation(M + 1)
        candidate_rows = [int(r) for r in perm if r != target][: params.candidate_count]
        results = [
            cached_hpo(grid, grid.row_dataset(r), stable_seed(seed, "hpo", r))
            for r in candidate_rows
        ]
        candidates = [res.best for res, _ in results]
        hpo_keys = [(res, key) for res, key in results]
    if not candidates:
        raise ConfigError("kl strategy needs at least one candidate")

    def own_row_scores(j):
        result, key = hpo_keys[j]
        return grid.scores_for_model(key, result.best_model)

    if len(candidates) == 1:
        winner = 0
    else:
        t_scores = grid.target_pool_scores(target)
        phi_means = np.empty(len(candidates))
        for j, cand in enumerate(candidates):
            if candidate_rows is not None:
                own = candidate_rows[j]
                rest = [
                    int(d)
                    for d in rng_for(seed, "kl-sel", own).permutation(M + 1)
                    if d != own and d != target
                ][: n_sel - 1]
                sel_rows = [own] + rest
            else:
                sel_rows = [
                    int(d)
                    for d in rng_for(seed, "kl-sel", "injected", j).permutation(M + 1)
                    if d != target
                ][:n_sel]
            phis = []
            for d in sel_rows:
                if candidate_rows is not None and d == candidate_rows[j]:
                    s_pool = own_row_scores(j)
                else:
                    s_pool = grid.ensure_cell(d, cand)
                on_set = grid.mask.mask[d]
                phis.append(phi_kl_scores(t_scores[on_set], s_pool[on_set]))
            phi_means[j] = np.mean(phis)
        winner = int(np.argmin(phi_means))

    chosen = candidates[winner]
    assignment = {d: chosen for d in range(M + 1) if d != target}
    overrides = {}
    if candidate_rows is not None:
        overrides[candidate_rows[winner]] = own_row_scores(winner)
    return assignment, overrides


def run_campaign(
    grid: MiaGrid,
    strategy: str,
    params: AttackParams,
    seed: int,
    targets=None,
    jobs: int = 1,
) -> list[AttackResult]:
    """Attack each target row, training only missing cells, and report the
    number of models newly trained per target."""
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}")
    M = grid.M
    rows = list(range(M + 1))
    results = []
    for i in rows if targets is None else targets:
        if not 0 <= i <= M:
            raise ConfigError(f"target {i} outside grid of {M + 1} rows")
        before = grid.counter.value
        if strategy == "threshold":
            scores = grid.target_pool_scores(i).copy()
        elif strategy == "lira":
            hypers = grid.row_hypers[i]
            if hypers is None:
                raise ConfigError(f"lira needs the target's hypers for row {i}")
            assignment = {d: hypers for d in rows if d != i}
            scores = _score_target(grid, i, assignment, {}, params.variance_mode, jobs)
        elif strategy == "acc":
            assignment = {}
            for d in rows:
                if d == i:
                    continue
                result, _ = cached_hpo(grid, grid.row_dataset(d), stable_seed(seed, "hpo", d))
                assignment[d] = result.best
            scores = _score_target(grid, i, assignment, {}, params.variance_mode, jobs)
        else:
            assignment, overrides = _kl_assignment(grid, i, params, seed)
            scores = _score_target(
                grid, i, assignment, overrides, params.variance_mode, jobs
            )
        results.append(
            AttackResult(
                target_index=i,
                strategy=strategy,
                scores=np.asarray(scores, dtype=np.float64),
                is_member=grid.mask.mask[i].copy(),
                models_trained=grid.counter.value - before,
                sample_ids=grid.mask.pool_ids.copy(),
            )
        )
    return results


def grid_manifest(grid: MiaGrid, models_trained: int | None = None) -> dict:
    """JSON-ready description of a built grid, with per-row hyper digests."""
    rows = []
    for i, hypers in enumerate(grid.row_hypers):
        entry = {"row": i, "dataset_digest": grid.row_digest(i)}
        if hypers is not None:
            entry["hypers"] = _hypers_to_dict(hypers)
            entry["hyper_digest"] = hyper_digest(hypers)
            entry["model_digest"] = grid.cell_key(i, hypers).digest()
        rows.append(entry)
    manifest = {
        "spec": {
            "dim": grid.spec.dim,
            "classes": grid.spec.classes,
            "class_separation": grid.spec.class_separation,
            "noise_sigma": grid.spec.noise_sigma,
            "seed": grid.spec.seed,
        },
        "arch": {
            "kind": grid.arch.kind,
            "dim": grid.arch.dim,
            "classes": grid.arch.classes,
            "hidden_units": grid.arch.hidden_units,
        },
        "M": grid.M,
        "pool_size": len(grid.pool),
        "hpo_source": grid.hpo_source,
        "seed": grid.seed,
        "dp": None
        if grid.dp is None
        else {"epsilon": grid.dp.epsilon, "delta": grid.dp.delta},
        "rows": rows,
    }
    if models_trained is not None:
        manifest["models_trained"] = models_trained
    return manifest
