"""Command-line front end wiring the modules into runnable experiments.

Subcommands: grid, attack, eval, compare-hpo, gc. Exit codes: 0 on success,
2 for configuration errors, 3 for numeric or training failures, 4 for store
integrity errors. The store root defaults to <output_dir>/store and can be
overridden with the MIAGRID_STORE environment variable.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import stats
from .accounting import DELTA_GRID, training_epsilon_curve
from .attacks import (
    AttackParams,
    MiaGrid,
    TrainCounter,
    build_grid,
    grid_manifest,
    run_campaign,
)
from .config import ExperimentConfig, load_config
from .errors import ConfigError, IntegrityError, MetricError, MiaGridError
from .seeding import stable_seed
from .store import Store
from .svgplot import render_roc_svg

FPR_LABELS = {1e-3: "1e-3", 1e-2: "1e-2", 1e-1: "1e-1"}


def _fpr_label(f: float) -> str:
    return FPR_LABELS.get(f, f"{f:g}")


def _grid_seed(config: ExperimentConfig, repeat: int) -> int:
    return stable_seed(config.seed, "grid", repeat)


def _attack_seed(config: ExperimentConfig, repeat: int) -> int:
    return stable_seed(config.seed, "attack", repeat)


def _build(config: ExperimentConfig, hpo_source: str, repeat: int, store: Store,
           counter: TrainCounter | None = None) -> MiaGrid:
    return build_grid(
        store=store,
        spec=config.data,
        arch=config.arch,
        M=config.M,
        pool_size=config.pool_size,
        space=config.space,
        dp=config.dp,
        hpo_source=hpo_source,
        seed=_grid_seed(config, repeat),
        counter=counter,
    )


def _attack_params(config: ExperimentConfig) -> AttackParams:
    return AttackParams(
        candidate_count=config.candidate_count,
        models_per_candidate=config.models_per_candidate,
        variance_mode=config.variance_mode,
    )


def _grid_manifest_path(config: ExperimentConfig, source: str, repeat: int) -> Path:
    return config.output_dir / "grids" / f"{source}-r{repeat}.json"


def _attack_dir(config: ExperimentConfig, source: str, strategy: str, repeat: int) -> Path:
    return config.output_dir / "attacks" / source / f"{strategy}-r{repeat}"


def scores_csv(result) -> str:
    lines = ["sample_id,score,is_member"]
    for sid, score, member in zip(result.sample_ids, result.scores, result.is_member):
        lines.append(f"{int(sid)},{float(score)!r},{int(member)}")
    return "\n".join(lines) + "\n"


def write_attack_artifacts(config, source, strategy, repeat, results, seed) -> Path:
    out = _attack_dir(config, source, strategy, repeat)
    out.mkdir(parents=True, exist_ok=True)
    combined = ["target,strategy,sample_id,score,is_member"]
    budgets = {}
    for res in results:
        (out / f"scores_t{res.target_index}.csv").write_text(scores_csv(res))
        budgets[str(res.target_index)] = res.models_trained
        for sid, score, member in zip(res.sample_ids, res.scores, res.is_member):
            combined.append(
                f"{res.target_index},{strategy},{int(sid)},{float(score)!r},{int(member)}"
            )
    (out / "results.csv").write_text("\n".join(combined) + "\n")
    manifest = {
        "strategy": strategy,
        "hpo_source": source,
        "repeat": repeat,
        "seed": seed,
        "params": {
            "C": config.candidate_count,
            "N": config.models_per_candidate,
            "T": config.space.trials,
            "variance_mode": config.variance_mode,
        },
        "models_trained": budgets,
        "targets": [res.target_index for res in results],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return out


def grid_epsilon_curve(manifest: dict) -> list[tuple[float, float]] | None:
    """Weakest eps(delta) curve over the grid's DP-trained target rows."""
    if manifest.get("dp") is None:
        return None
    curves = []
    for row in manifest["rows"]:
        hypers = row.get("hypers")
        if hypers is None or hypers.get("noise_multiplier") is None:
            continue
        curves.append(
            [
                eps
                for eps, _ in training_epsilon_curve(
                    hypers["noise_multiplier"],
                    hypers["batch_size"],
                    hypers["epochs"],
                    row["size"],
                )
            ]
        )
    if not curves:
        return None
    weakest = np.max(np.vstack(curves), axis=0)
    return list(zip(weakest.tolist(), DELTA_GRID.tolist()))


def cmd_grid(config: ExperimentConfig, repeat: int, jobs: int = 1) -> int:
    store = Store(config.store_root)
    counter = TrainCounter()
    grid = _build(config, config.hpo_source, repeat, store, counter)
    manifest = grid_manifest(grid, models_trained=counter.value)
    path = _grid_manifest_path(config, config.hpo_source, repeat)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2))
    print(f"grid written: {path} (models trained: {counter.value})")
    return 0


def cmd_attack(config: ExperimentConfig, strategy: str, repeat: int, jobs: int = 1) -> int:
    manifest_path = _grid_manifest_path(config, config.hpo_source, repeat)
    if not manifest_path.exists():
        raise ConfigError(f"grid manifest missing: {manifest_path}; run `grid` first")
    recorded = json.loads(manifest_path.read_text())
    store = Store(config.store_root)
    grid = _build(config, config.hpo_source, repeat, store)
    rebuilt = grid_manifest(grid)
    for old, new in zip(recorded["rows"], rebuilt["rows"]):
        if old.get("hyper_digest") != new.get("hyper_digest"):
            raise IntegrityError(
                f"grid row {old['row']} hypers changed since the manifest was written"
            )
    seed = _attack_seed(config, repeat)
    results = run_campaign(grid, strategy, _attack_params(config), seed, jobs=jobs)
    out = write_attack_artifacts(config, config.hpo_source, strategy, repeat, results, seed)
    total = sum(res.models_trained for res in results)
    print(f"attack {strategy} written: {out} (models trained: {total})")
    return 0


def _read_results(path: Path):
    scores, labels = [], []
    with open(path) as fh:
        next(fh)
        for line in fh:
            _, _, _, score, member = line.rstrip("\n").split(",")
            scores.append(float(score))
            labels.append(int(member))
    return np.array(scores), np.array(labels, dtype=bool)


def pooled_tpr_at_fprs(results, fprs):
    scores = np.concatenate([r.scores for r in results])
    labels = np.concatenate([r.is_member for r in results])
    roc = stats.roc_curve(scores, labels)
    return {f: stats.tpr_at_fpr(roc, f) for f in fprs}, roc


def cmd_eval(config: ExperimentConfig, jobs: int = 1) -> int:
    source = config.hpo_source
    out = config.output_dir / "eval" / source
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = _grid_manifest_path(config, source, 0)
    bound_curve = None
    if manifest_path.exists():
        bound_curve = grid_epsilon_curve(json.loads(manifest_path.read_text()))

    report_lines = ["strategy,fpr,tp,pos,tpr,cp_lo,cp_hi,dp_bound"]
    curves = {}
    bars = {}
    found_any = False
    for strategy in config.strategies:
        scores_parts, label_parts = [], []
        for repeat in range(config.repeats):
            path = _attack_dir(config, source, strategy, repeat) / "results.csv"
            if path.exists():
                s, l = _read_results(path)
                scores_parts.append(s)
                label_parts.append(l)
        if not scores_parts:
            continue
        found_any = True
        scores = np.concatenate(scores_parts)
        labels = np.concatenate(label_parts)
        roc = stats.roc_curve(scores, labels)
        roc_lines = ["fpr,tpr,threshold"]
        for f, t, th in zip(roc.fpr, roc.tpr, roc.thresholds):
            roc_lines.append(f"{f!r},{t!r},{th!r}")
        (out / f"roc_{strategy}.csv").write_text("\n".join(roc_lines) + "\n")
        curves[strategy] = (roc.fpr, roc.tpr)
        bars[strategy] = []
        for f in config.fpr_grid:
            tpr = stats.tpr_at_fpr(roc, f)
            tp = int(round(tpr * roc.n_pos))
            lo, hi = stats.clopper_pearson(tp, roc.n_pos, config.alpha)
            bnd = "" if bound_curve is None else repr(stats.dp_tpr_bound(bound_curve, f))
            report_lines.append(
                f"{strategy},{f:g},{tp},{roc.n_pos},{tpr!r},{lo!r},{hi!r},{bnd}"
            )
            bars[strategy].append((f, tpr, lo, hi))
    if not found_any:
        raise MetricError("no attack results found; run `attack` first")
    (out / "tpr_report.csv").write_text("\n".join(report_lines) + "\n")
    bound_overlay = None
    if bound_curve is not None:
        fprs = np.logspace(-3, 0, 50)
        bound_overlay = (fprs, [stats.dp_tpr_bound(bound_curve, f) for f in fprs])
    svg = render_roc_svg(curves, bars, bound_overlay, title=f"MIA ROC ({source})")
    (out / "roc.svg").write_text(svg)
    print(f"eval written: {out}")
    compare_dir = config.output_dir / "eval" / "compare"
    if (config.output_dir / "attacks" / "td").exists() and (
        config.output_dir / "attacks" / "ed"
    ).exists():
        _write_compare_tables_from_files(config, compare_dir)
        print(f"TD/ED tables written: {compare_dir}")
    return 0


def _experiment_columns(config: ExperimentConfig) -> dict:
    return {
        "dataset": f"gauss-d{config.data.dim}-c{config.data.classes}",
        "model": config.arch.kind,
        "config": "full",
        "S": config.S,
        "epsilon": "inf" if config.dp is None else f"{config.dp.epsilon:g}",
    }


def _tpr_by_repeat(config, source, strategy):
    """Pooled TPR per repeat at each grid FPR, from written attack results."""
    per_fpr = {f: [] for f in config.fpr_grid}
    for repeat in range(config.repeats):
        path = _attack_dir(config, source, strategy, repeat) / "results.csv"
        if not path.exists():
            return None
        scores, labels = _read_results(path)
        roc = stats.roc_curve(scores, labels)
        for f in config.fpr_grid:
            per_fpr[f].append(stats.tpr_at_fpr(roc, f))
    return per_fpr


def _compare_tables(config: ExperimentConfig, tpr_td, tpr_ed):
    """Paired one-sided TD-vs-ED tables; BY-adjusted per test kind."""
    cols = _experiment_columns(config)
    rows = []
    cells = {"t": [], "permutation": []}
    for strategy in config.strategies:
        if tpr_td.get(strategy) is None or tpr_ed.get(strategy) is None:
            continue
        row = {"MIA": strategy}
        for f in config.fpr_grid:
            x = np.array(tpr_td[strategy][f])
            y = np.array(tpr_ed[strategy][f])
            label = _fpr_label(f)
            row[f"dtpr_{label}"] = float(np.mean(x - y)) * 1e4
            t_rep = stats.paired_t_test(x, y)
            p_rep = stats.paired_permutation_test(
                x, y, seed=stable_seed(config.seed, "perm", strategy, f)
            )
            row[f"p_{label}"] = t_rep.p_value
            row[f"p_perm_{label}"] = p_rep.p_value
            cells["t"].append((strategy, f))
            cells["permutation"].append((strategy, f))
        rows.append(row)
    if not rows:
        raise MetricError("no overlapping TD/ED results to compare")
    adjusted = {}
    for kind, key in (("t", "p_"), ("permutation", "p_perm_")):
        pvals = [row[f"{key}{_fpr_label(f)}"] for row in rows for f in config.fpr_grid]
        adj = stats.by_adjust(pvals)
        adjusted[kind] = {
            cell: adj[i] for i, cell in enumerate(
                (row["MIA"], f) for row in rows for f in config.fpr_grid
            )
        }

    def table(kind, key):
        header = ["dataset", "model", "config", "S", "epsilon", "MIA"]
        for f in config.fpr_grid:
            label = _fpr_label(f)
            header += [f"dtpr_{label}", f"p_{label}", f"p_adjusted_{label}"]
        lines = [",".join(header)]
        for row in rows:
            cells_out = [str(cols[c]) for c in ("dataset", "model", "config", "S", "epsilon")]
            cells_out.append(row["MIA"])
            for f in config.fpr_grid:
                label = _fpr_label(f)
                cells_out += [
                    f"{row[f'dtpr_{label}']:.4f}",
                    f"{row[f'{key}{label}']!r}",
                    f"{adjusted[kind][(row['MIA'], f)]!r}",
                ]
            lines.append(",".join(cells_out))
        return "\n".join(lines) + "\n"

    metadata = {
        "tests": "paired 1-sided, H1: tpr_td > tpr_ed",
        "pairing": "repeats",
        "adjustment": "Benjamini-Yekutieli per test kind across all strategies and FPRs",
        "n_pairs": config.repeats,
    }
    return table("t", "p_"), table("permutation", "p_perm_"), metadata


def _write_compare_tables_from_files(config: ExperimentConfig, out: Path):
    tpr_td = {s: _tpr_by_repeat(config, "td", s) for s in config.strategies}
    tpr_ed = {s: _tpr_by_repeat(config, "ed", s) for s in config.strategies}
    ttest, permtest, metadata = _compare_tables(config, tpr_td, tpr_ed)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ttest_table.csv").write_text(ttest)
    (out / "permtest_table.csv").write_text(permtest)
    (out / "metadata.json").write_text(json.dumps(metadata, indent=2))


def cmd_compare_hpo(config: ExperimentConfig, jobs: int = 1) -> int:
    """Run the full TD-vs-ED pipeline over all repeats, then emit tables."""
    store = Store(config.store_root)
    for source in ("td", "ed"):
        for repeat in range(config.repeats):
            counter = TrainCounter()
            grid = _build(config, source, repeat, store, counter)
            manifest = grid_manifest(grid, models_trained=counter.value)
            path = _grid_manifest_path(config, source, repeat)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(manifest, indent=2))
            seed = _attack_seed(config, repeat)
            for strategy in config.strategies:
                results = run_campaign(
                    grid, strategy, _attack_params(config), seed, jobs=jobs
                )
                write_attack_artifacts(config, source, strategy, repeat, results, seed)
    _write_compare_tables_from_files(config, config.output_dir / "eval" / "compare")
    print(f"TD/ED comparison written: {config.output_dir / 'eval' / 'compare'}")
    return 0


def cmd_gc(config: ExperimentConfig) -> int:
    store = Store(config.store_root)
    orphans = store.unreferenced()
    for name in orphans:
        print(name)
    print(f"{len(orphans)} unreferenced object(s); nothing deleted")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miagrid",
        description="Shadow-model membership-inference auditing on a model grid",
    )
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--jobs", type=int, default=1, help="worker parallelism bound")
    sub = parser.add_subparsers(dest="command", required=True)
    p_grid = sub.add_parser("grid", help="build pool, mask, HPO, and target models")
    p_grid.add_argument("config")
    p_grid.add_argument("--repeat", type=int, default=0)
    p_attack = sub.add_parser("attack", help="run an attack campaign on the grid")
    p_attack.add_argument("config")
    p_attack.add_argument("--strategy", required=True)
    p_attack.add_argument("--repeat", type=int, default=0)
    p_eval = sub.add_parser("eval", help="ROC reports, plots, and TD/ED tables")
    p_eval.add_argument("config")
    p_cmp = sub.add_parser("compare-hpo", help="full TD-vs-ED pipeline over repeats")
    p_cmp.add_argument("config")
    p_gc = sub.add_parser("gc", help="list unreferenced store objects")
    p_gc.add_argument("config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, seed_override=args.seed)
        if args.command == "grid":
            return cmd_grid(config, args.repeat, args.jobs)
        if args.command == "attack":
            return cmd_attack(config, args.strategy, args.repeat, args.jobs)
        if args.command == "eval":
            return cmd_eval(config, args.jobs)
        if args.command == "compare-hpo":
            return cmd_compare_hpo(config, args.jobs)
        if args.command == "gc":
            return cmd_gc(config)
        raise ConfigError(f"unknown command {args.command!r}")
    except MiaGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
