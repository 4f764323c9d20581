"""Random-search hyperparameter optimization on a 70/30 split.

Each trial samples learning rate (log-uniform), batch size (integer uniform
up to the dataset size), and, under DP, a clipping norm (log-uniform); the
noise multiplier is derived per trial from the target privacy budget and the
trial's implied step count. The best trial maximizes top-1 validation
accuracy, ties broken by lowest trial index.
"""

import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import models
from .accounting import DpSpec, calibrate_noise
from .errors import ConfigError, HpoFailedError, TrainingDivergedError
from .models import Architecture, HyperParams, Model
from .seeding import rng_for, stable_seed
from .synthdata import LabeledSet

log = logging.getLogger(__name__)

TRAIN_FRACTION = 0.7


@dataclass(frozen=True)
class SearchSpace:
    lr_low: float = 1e-7
    lr_high: float = 1e-2
    batch_low: int = 10
    batch_high: int | None = None  # defaults to |dataset|
    clip_low: float = 0.2
    clip_high: float = 10.0
    epochs: int = 40
    trials: int = 20

    def __post_init__(self):
        if not 0 < self.lr_low <= self.lr_high:
            raise ConfigError("learning-rate range must satisfy 0 < low <= high")
        if self.batch_low < 1:
            raise ConfigError("batch_low must be >= 1")
        if self.batch_high is not None and self.batch_high < self.batch_low:
            raise ConfigError("batch_high must be >= batch_low")
        if not 0 < self.clip_low <= self.clip_high:
            raise ConfigError("clip range must satisfy 0 < low <= high")
        if self.epochs < 1 or self.trials < 1:
            raise ConfigError("epochs and trials must be >= 1")


@dataclass
class TrialRecord:
    hypers: HyperParams
    val_accuracy: float
    diverged: bool = False
    note: str = ""


@dataclass
class HpoResult:
    best: HyperParams
    trials: list[TrialRecord]
    best_index: int
    best_model: Model | None = field(default=None, repr=False)

    @property
    def best_accuracy(self) -> float:
        return self.trials[self.best_index].val_accuracy


def split_train_val(dataset: LabeledSet, seed: int) -> tuple[LabeledSet, LabeledSet]:
    """Deterministic shuffled 70/30 partition."""
    n = len(dataset)
    if n < 10:
        raise ConfigError(f"dataset too small for a 70/30 split: {n} < 10")
    perm = rng_for(seed, "split").permutation(n)
    n_train = int(math.floor(TRAIN_FRACTION * n))
    return dataset.subset(perm[:n_train]), dataset.subset(perm[n_train:])


def _sample_hypers(
    rng: np.random.Generator, space: SearchSpace, n_total: int, n_train: int,
    dp: DpSpec | None,
) -> HyperParams:
    lr = float(np.exp(rng.uniform(np.log(space.lr_low), np.log(space.lr_high))))
    batch_high = space.batch_high if space.batch_high is not None else n_total
    batch = int(rng.integers(space.batch_low, batch_high + 1))
    if dp is None:
        return HyperParams(lr, batch, space.epochs)
    clip = float(np.exp(rng.uniform(np.log(space.clip_low), np.log(space.clip_high))))
    batch_eff = min(batch, n_train)
    steps = space.epochs * math.ceil(n_train / batch_eff)
    noise = calibrate_noise(dp, steps, batch_eff / n_train)
    return HyperParams(lr, batch, space.epochs, clip_norm=clip, noise_multiplier=noise)


def run_hpo(
    arch: Architecture,
    dataset: LabeledSet,
    space: SearchSpace,
    dp: DpSpec | None,
    seed: int,
    counter=None,
) -> HpoResult:
    """Random search over `space.trials` configurations; returns all trials
    and the validation-accuracy argmax together with its trained model."""
    train_set, val_set = split_train_val(dataset, stable_seed(seed, "split"))
    if dp is not None and dp.delta >= 1.0 / len(train_set):
        log.warning(
            "delta=%g is not below 1/|train|=%g; the guarantee is weak",
            dp.delta, 1.0 / len(train_set),
        )
    trials: list[TrialRecord] = []
    best_index = -1
    best_acc = -1.0
    best_model = None
    for t in range(space.trials):
        hypers = _sample_hypers(
            rng_for(seed, "trial", t), space, len(dataset), len(train_set), dp
        )
        try:
            model = models.train(arch, train_set, hypers, stable_seed(seed, "fit", t))
        except TrainingDivergedError as exc:
            if counter is not None:
                counter.add(1)
            trials.append(TrialRecord(hypers, float("nan"), True, str(exc)))
            continue
        if counter is not None:
            counter.add(1)
        preds = models.predict_confidence(model, val_set.features).argmax(axis=1)
        acc = float(np.mean(preds == val_set.labels))
        trials.append(TrialRecord(hypers, acc))
        if acc > best_acc:
            best_index, best_acc, best_model = t, acc, model
    if best_index < 0:
        raise HpoFailedError([t.note for t in trials])
    return HpoResult(trials[best_index].hypers, trials, best_index, best_model)


def trials_csv(result: HpoResult) -> str:
    buf = io.StringIO()
    buf.write("trial,lr,batch,clip,noise,val_acc\n")
    for i, rec in enumerate(result.trials):
        h = rec.hypers
        buf.write(
            f"{i},{h.learning_rate!r},{h.batch_size},"
            f"{'' if h.clip_norm is None else repr(h.clip_norm)},"
            f"{'' if h.noise_multiplier is None else repr(h.noise_multiplier)},"
            f"{rec.val_accuracy!r}\n"
        )
    return buf.getvalue()


def best_json(result: HpoResult) -> str:
    h = result.best
    return json.dumps(
        {
            "best_index": result.best_index,
            "val_accuracy": result.best_accuracy,
            "learning_rate": h.learning_rate,
            "batch_size": h.batch_size,
            "epochs": h.epochs,
            "clip_norm": h.clip_norm,
            "noise_multiplier": h.noise_multiplier,
        },
        indent=2,
    )
