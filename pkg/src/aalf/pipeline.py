"""Experiment stages and their on-disk artifacts.

Every stage reads only files written by earlier stages, writes into
``<run>/<stage>.partial/`` and renames the directory once it finishes. The
run directory is keyed by the configuration hash.
"""

from __future__ import annotations

import contextlib
import csv
import dataclasses
import hashlib
import io
import json
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .errors import DegenerateInput, EmptyData, StageMissing
from .features import segment_features
from .forecasters import (
    PredictionTable,
    baseline_last,
    baseline_mean,
    fit_ar,
    fit_mlp,
    import_predictions,
    predict_ar,
    predict_mlp,
)
from .ingest import (
    MIN_LENGTH,
    SEGMENTS,
    Dataset,
    SplitBounds,
    WindowedSet,
    default_lag,
    filter_constant,
    make_windows,
    normalize_frequency,
    parse_csv,
    parse_tsf,
    split_series,
    standardize,
    write_tsf,
)
from .metrics import confusion, dataset_average, empirical_p, f1_pooled, rmse, smape
from .oracle import budget, default_p_grid, floor_sweep, loss_diff, mixed_prediction, optimal_selection
from .seeding import derive_seed
from .selector import (
    ConstantSelector,
    ForestConfig,
    RandomSelectorModel,
    dumps,
    fit_forest,
    fit_logistic,
    fit_rfu,
)
from .stats import cd_groups

STAGES = ("ingest", "train-base", "oracle", "fit-selector", "evaluate", "report")
REQUIRES = {
    "ingest": (),
    "train-base": ("ingest",),
    "oracle": ("ingest", "train-base"),
    "fit-selector": ("ingest", "train-base"),
    "evaluate": ("ingest", "train-base", "fit-selector"),
    "report": ("ingest", "train-base", "oracle", "fit-selector", "evaluate"),
}
CLASSIFIER_LABELS = {"rnd": "RND", "lr": "LR", "rf": "RF", "rfu": "RFu"}
METRICS_HEADER = ["dataset", "series", "model_or_selector", "rmse", "smape", "empirical_p"]


def _num(x) -> str:
    return repr(float(x))


def p_label(p: float) -> str:
    return f"{p:g}"


def selector_name(kind: str, p: float) -> str:
    """Evaluation name of a classifier-driven mix; the RFu mix is AALF itself."""
    return f"AALF_p{p_label(p)}" if kind == "rfu" else f"{CLASSIFIER_LABELS[kind]}_p{p_label(p)}"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_csv(path: Path, header, rows) -> None:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(out.getvalue())


def _read_csv(path: Path) -> list[dict]:
    return list(csv.DictReader(io.StringIO(path.read_text())))


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


@dataclass
class Prepared:
    """One ingested dataset as later stages see it."""

    name: str
    lag: int
    values: dict[str, np.ndarray]
    splits: dict[str, SplitBounds]
    scaling: dict[str, tuple[float, float]]

    @property
    def names(self) -> list[str]:
        return list(self.values)


class Run:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.root = cfg.run_dir()

    def require(self, stage: str) -> None:
        for dep in REQUIRES[stage]:
            if not (self.root / dep / "stage.json").is_file():
                raise StageMissing(
                    f"stage {stage!r} needs the outputs of {dep!r}, which are missing under {self.root}; "
                    f"run `aalf {dep} --config <config>` first"
                )

    @contextlib.contextmanager
    def stage(self, name: str):
        self.require(name)
        self.root.mkdir(parents=True, exist_ok=True)
        _write_json(self.root / "config.json", self.cfg.semantic_dict())
        partial = self.root / f"{name}.partial"
        if partial.exists():
            shutil.rmtree(partial)
        partial.mkdir()
        start = time.perf_counter()
        yield partial
        files = sorted(p for p in partial.rglob("*") if p.is_file())
        manifest = {
            "stage": name,
            "files": {p.relative_to(partial).as_posix(): _sha256(p) for p in files},
            "wall_clock_s": round(time.perf_counter() - start, 3),
        }
        _write_json(partial / "stage.json", manifest)
        final = self.root / name
        if final.exists():
            shutil.rmtree(final)
        partial.rename(final)

    def map(self, fn, items) -> list:
        """Ordered map; worker count never changes results because every task seeds itself."""
        items = list(items)
        if self.cfg.threads == 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.cfg.threads) as pool:
            return list(pool.map(fn, items))

    # ------------------------------------------------------------------ loaders

    def prepared(self, dataset: str) -> Prepared:
        base = self.root / "ingest" / dataset
        meta = json.loads((base / "meta.json").read_text())
        ds = parse_tsf((base / "series.tsf").read_bytes())
        scaling = {r["series"]: (float(r["mean"]), float(r["std"])) for r in _read_csv(base / "scaling.csv")}
        return Prepared(
            dataset,
            meta["lag"],
            {s.name: s.values for s in ds.series},
            {k: SplitBounds(*v) for k, v in meta["splits"].items()},
            scaling,
        )

    def predictions(self, dataset: str) -> PredictionTable:
        return PredictionTable.load(self.root / "train-base" / dataset / "predictions")

    def datasets(self) -> list[str]:
        return [d.name for d in self.cfg.datasets]


# --------------------------------------------------------------------- ingest

def _read_dataset(dcfg) -> Dataset:
    path = Path(dcfg.path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset {dcfg.name!r}: no such file {path}")
    data = path.read_bytes()
    if dcfg.format == "tsf":
        return parse_tsf(data, name=dcfg.name)
    return parse_csv(data, dcfg.layout, dcfg.name, dcfg.frequency or "other")


def cmd_ingest(cfg: ExperimentConfig) -> Path:
    run = Run(cfg)
    with run.stage("ingest") as out:
        discards = []
        for dcfg in cfg.datasets:
            ds = _read_dataset(dcfg)
            freq = normalize_frequency(dcfg.frequency) if dcfg.frequency else ds.series[0].frequency
            if dcfg.lag is not None:
                lag = dcfg.lag
            elif dcfg.frequency or ds.lag is None:
                lag = default_lag(freq)
            else:
                lag = ds.lag

            long_enough = [s for s in ds.series if len(s) >= MIN_LENGTH]
            discards += [(dcfg.name, s.name, "too_short") for s in ds.series if len(s) < MIN_LENGTH]
            kept, constant = filter_constant(dataclasses.replace(ds, series=long_enough), cfg.train_frac, cfg.val_frac)
            discards += [(dcfg.name, name, "constant_segment") for name in constant]

            working, splits, scaling = [], {}, []
            for s in kept.series:
                split = split_series(s, cfg.train_frac, cfg.val_frac)
                if split.train_end <= lag:
                    discards.append((dcfg.name, s.name, "insufficient_history"))
                    continue
                if cfg.standardize:
                    s, mean, std = standardize(s, split)
                else:
                    mean, std = 0.0, 1.0
                working.append(s)
                splits[s.name] = [split.train_end, split.val_end, split.total]
                scaling.append([s.name, _num(mean), _num(std)])
            if not working:
                raise EmptyData(f"dataset {dcfg.name!r} has no usable series after filtering")

            base = out / dcfg.name
            base.mkdir()
            (base / "series.tsf").write_text(write_tsf(Dataset(dcfg.name, working, lag=lag, horizon=ds.horizon)))
            _write_csv(base / "scaling.csv", ["series", "mean", "std"], scaling)
            _write_json(
                base / "meta.json",
                {
                    "dataset": dcfg.name,
                    "frequency": freq,
                    "lag": lag,
                    "standardized": cfg.standardize,
                    "n_series_read": len(ds.series),
                    "n_series_kept": len(working),
                    "splits": splits,
                },
            )
        _write_csv(out / "discarded.csv", ["dataset", "series", "reason"], discards)
    return run.root / "ingest"


# ----------------------------------------------------------------- train-base

def _standardized_import(table: PredictionTable, text: str, prep: Prepared) -> None:
    import_predictions(table, text, "g")
    for (series, segment), entry in table.entries.items():
        if "g" in entry.preds:
            mean, std = prep.scaling[series]
            table.register("g", series, segment, (entry.preds["g"] - mean) / std, provenance="imported")


def cmd_train_base(cfg: ExperimentConfig) -> Path:
    run = Run(cfg)
    with run.stage("train-base") as out:
        for dcfg in cfg.datasets:
            prep = run.prepared(dcfg.name)
            table = PredictionTable()
            windows: dict[tuple[str, str], WindowedSet] = {}
            for name in prep.names:
                for segment in SEGMENTS:
                    w = make_windows(prep.values[name], prep.lag, segment, prep.splits[name])
                    table.add_segment(name, segment, w)
                    windows[(name, segment)] = w

            ar_models = run.map(
                lambda name: fit_ar(windows[(name, "train")], cfg.ar_intercept, cfg.ar_ridge), prep.names
            )
            for name, model in zip(prep.names, ar_models):
                for segment in SEGMENTS:
                    inputs = windows[(name, segment)].inputs
                    table.register("f", name, segment, predict_ar(model, inputs))
                    table.register("mean", name, segment, baseline_mean(inputs))
                    table.register("last", name, segment, baseline_last(inputs))

            base = out / dcfg.name
            seeds = {}
            if dcfg.g_predictions:
                path = Path(dcfg.g_predictions)
                if not path.is_file():
                    raise FileNotFoundError(f"dataset {dcfg.name!r}: no such prediction file {path}")
                _standardized_import(table, path.read_text(), prep)
            else:
                train = [windows[(name, "train")] for name in prep.names]
                pooled = WindowedSet(
                    np.vstack([w.inputs for w in train]),
                    np.concatenate([w.targets for w in train]),
                    np.concatenate([w.origin_indices for w in train]),
                )
                seeds["mlp"] = derive_seed(cfg.seed, dcfg.name, "mlp")
                mlp = fit_mlp(pooled, dataclasses.replace(cfg.mlp, seed=seeds["mlp"]))
                for (name, segment), w in windows.items():
                    table.register("g", name, segment, predict_mlp(mlp, w.inputs))
                _write_json(base / "models" / "mlp.json", mlp.to_dict())

            table.save(base / "predictions")
            _write_json(base / "models" / "ar.json", {n: m.to_dict() for n, m in zip(prep.names, ar_models)})
            _write_json(base / "seeds.json", seeds)
    return run.root / "train-base"


# --------------------------------------------------------------------- oracle

def cmd_oracle(cfg: ExperimentConfig) -> Path:
    run = Run(cfg)
    grid = default_p_grid(cfg.floor_points)
    with run.stage("oracle") as out:
        for dataset in run.datasets():
            table = run.predictions(dataset)
            names = table.series_names

            def sweep(name):
                e = table.get(name, "test")
                return floor_sweep(e["f"], e["g"], e.truth, grid)

            curves = run.map(sweep, names)
            for name, curve in zip(names, curves):
                path = out / dataset / "floor" / f"{name}.csv"
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(curve.to_csv())
            achieved = np.mean([c.achieved_p for c in curves], axis=0)
            floor = np.mean([c.rmse for c in curves], axis=0)
            _write_csv(
                out / dataset / "floor_aggregate.csv",
                ["p", "achieved_p", "rmse"],
                [[_num(p), _num(a), _num(r)] for p, a, r in zip(grid, achieved, floor)],
            )
    return run.root / "oracle"


# --------------------------------------------------------------- fit-selector

def fit_classifier(kind: str, X, y, p: float, cfg: ExperimentConfig, seed: int):
    """Train one selector; single-class labels give a constant selector."""
    scfg = cfg.selectors
    if kind == "rnd":
        return RandomSelectorModel(p, seed)
    y = np.asarray(y)
    if np.unique(y).size < 2:
        return ConstantSelector(int(y[0]))
    if kind == "lr":
        return fit_logistic(X, y, l2=scfg.lr_l2)
    forest = ForestConfig(n_trees=scfg.rf_trees, max_depth=scfg.max_depth, min_leaf=scfg.min_leaf)
    if kind == "rf":
        return fit_forest(X, y, forest, seed)
    return fit_rfu(X, y, forest, scfg.rfu_members, seed, scfg.threshold)


def _segment_data(table, prep: Prepared, name: str, segment: str):
    X, f, g, y = segment_features(table, prep.values[name], prep.lag, name, segment)
    return X, loss_diff(f, g, y)


def _labels(ell: np.ndarray, p: float) -> np.ndarray:
    return optimal_selection(ell, budget(p, ell.size)).s


def cmd_fit_selector(cfg: ExperimentConfig) -> Path:
    run = Run(cfg)
    kinds = cfg.selectors.classifiers
    grid = cfg.p_grid
    threshold = cfg.selectors.threshold
    with run.stage("fit-selector") as out:
        f1_rows = []
        for dataset in run.datasets():
            prep = run.prepared(dataset)
            table = run.predictions(dataset)
            names = table.series_names
            data = {name: (_segment_data(table, prep, name, "val"), _segment_data(table, prep, name, "test")) for name in names}
            jobs = [(kind, p) for p in grid for kind in kinds]

            if cfg.selectors.mode == "per_series":

                def fit_series(name):
                    (Xv, ell_v), (Xt, _) = data[name]
                    results = {}
                    for kind, p in jobs:
                        seed = derive_seed(cfg.seed, dataset, name, kind, p_label(p))
                        model = fit_classifier(kind, Xv, _labels(ell_v, p), p, cfg, seed)
                        results[(kind, p)] = (model, seed, model.predict_proba(Xt), model.select(Xt, threshold))
                    return results

                per_series = dict(zip(names, run.map(fit_series, names)))
            else:

                def fit_global(job):
                    kind, p = job
                    X = np.vstack([data[n][0][0] for n in names])
                    y = np.concatenate([_labels(data[n][0][1], p) for n in names])
                    seed = derive_seed(cfg.seed, dataset, "global", kind, p_label(p))
                    model = fit_classifier(kind, X, y, p, cfg, seed)
                    # RND draws per series so its stream does not depend on series order
                    return {
                        n: (
                            model,
                            seed,
                            model.predict_proba(data[n][1][0]),
                            (
                                RandomSelectorModel(p, derive_seed(seed, n)) if kind == "rnd" else model
                            ).select(data[n][1][0], threshold),
                        )
                        for n in names
                    }

                per_job = dict(zip(jobs, run.map(fit_global, jobs)))
                per_series = {n: {job: per_job[job][n] for job in jobs} for n in names}

            seeds_rows = []
            f1 = {}
            for kind, p in jobs:
                rows, counts = [], []
                for name in names:
                    model, seed, proba, selected = per_series[name][(kind, p)]
                    truth_labels = _labels(data[name][1][1], p)
                    counts.append(confusion(selected, truth_labels))
                    origin = table.get(name, "test").origin
                    rows += [
                        [name, int(o), _num(pr), int(s), int(t)]
                        for o, pr, s, t in zip(origin, proba, selected, truth_labels)
                    ]
                    seeds_rows.append([name, CLASSIFIER_LABELS[kind], p_label(p), seed])
                    if cfg.selectors.save_models:
                        path = out / dataset / "models" / f"{kind}_p{p_label(p)}" / f"{name}.json"
                        path.parent.mkdir(parents=True, exist_ok=True)
                        path.write_text(dumps(model) + "\n")
                _write_csv(
                    out / dataset / "selections" / f"{kind}_p{p_label(p)}.csv",
                    ["series", "origin_index", "proba", "selected", "label"],
                    rows,
                )
                f1[(kind, p)] = f1_pooled(counts)
            _write_csv(out / dataset / "seeds.csv", ["series", "classifier", "p", "seed"], seeds_rows)
            for kind in kinds:
                f1_rows.append([dataset, CLASSIFIER_LABELS[kind], *(_num(f1[(kind, p)]) for p in grid)])
        _write_csv(out / "f1.csv", ["dataset", "classifier", *(p_label(p) for p in grid)], f1_rows)
        _write_csv(
            out / "f1_long.csv",
            ["dataset", "classifier", "p", "f1"],
            [[row[0], row[1], p_label(p), v] for row in f1_rows for p, v in zip(grid, row[2:])],
        )
    return run.root / "fit-selector"


def read_selections(run: Run, dataset: str, kind: str, p: float) -> dict[str, np.ndarray]:
    path = run.root / "fit-selector" / dataset / "selections" / f"{kind}_p{p_label(p)}.csv"
    grouped: dict[str, list[int]] = {}
    for row in _read_csv(path):
        grouped.setdefault(row["series"], []).append(int(row["selected"]))
    return {k: np.array(v, dtype=np.int8) for k, v in grouped.items()}


# ------------------------------------------------------------------- evaluate

def cmd_evaluate(cfg: ExperimentConfig) -> Path:
    run = Run(cfg)
    kinds = cfg.selectors.classifiers
    with run.stage("evaluate") as out:
        metric_rows = []
        losses: dict[tuple[str, str], dict[str, float]] = {}
        for dataset in run.datasets():
            table = run.predictions(dataset)
            selections = {(k, p): read_selections(run, dataset, k, p) for p in cfg.p_grid for k in kinds}
            per_method: dict[str, list[tuple[float, float | None]]] = {}
            for name in table.series_names:
                e = table.get(name, "test")
                f, g, y = e["f"], e["g"], e.truth
                candidates = [
                    ("f_only", f, 1.0),
                    ("g_only", g, 0.0),
                    ("MeanValue", e["mean"], None),
                    ("LastValue", e["last"], None),
                ]
                for (kind, p), chosen in selections.items():
                    s = chosen[name]
                    candidates.append((selector_name(kind, p), mixed_prediction(f, g, s), empirical_p(s)))
                row_losses = {}
                for method, pred, emp in candidates:
                    r = rmse(pred, y)
                    row_losses[method] = r
                    per_method.setdefault(method, []).append((r, emp))
                    metric_rows.append(
                        [dataset, name, method, _num(r), _num(smape(pred, y)), "" if emp is None else _num(emp)]
                    )
                losses[(dataset, name)] = row_losses

            scatter = []
            for method, vals in per_method.items():
                if vals[0][1] is None:
                    continue
                scatter.append(
                    [method, _num(dataset_average([v[1] for v in vals])), _num(dataset_average([v[0] for v in vals]))]
                )
            _write_csv(out / dataset / "scatter.csv", ["selector", "empirical_p", "avg_rmse"], scatter)

        _write_csv(out / "metrics.csv", METRICS_HEADER, metric_rows)
        methods = list(next(iter(losses.values())))
        matrix = np.array([[row[m] for m in methods] for row in losses.values()])
        try:
            result = cd_groups(matrix, methods)
        except DegenerateInput:
            (out / "cd.csv").write_text("method,avg_rank,group_ids\n")
            _write_json(out / "cd.json", {"skipped": "need at least two series for rank tests"})
        else:
            (out / "cd.csv").write_text(result.to_csv())
            _write_json(
                out / "cd.json",
                {
                    "n_series": int(matrix.shape[0]),
                    "friedman_statistic": result.friedman.statistic,
                    "friedman_p": result.friedman.p_value,
                    "correction": None,
                    "groups": result.groups,
                    "pairwise_p": {f"{a}|{b}": v for (a, b), v in result.pairwise.items()},
                },
            )
    return run.root / "evaluate"


# --------------------------------------------------------------------- report

def _summary(run: Run) -> dict:
    root = run.root
    f1 = _read_csv(root / "fit-selector" / "f1.csv")
    out = {}
    discards = _read_csv(root / "ingest" / "discarded.csv")
    for dataset in run.datasets():
        meta = json.loads((root / "ingest" / dataset / "meta.json").read_text())
        floor = _read_csv(root / "oracle" / dataset / "floor_aggregate.csv")
        out[dataset] = {
            "lag": meta["lag"],
            "series_kept": meta["n_series_kept"],
            "series_discarded": sum(1 for d in discards if d["dataset"] == dataset),
            "floor_at_p1": float(floor[-1]["rmse"]),
            "f1": {r["classifier"]: {k: float(v) for k, v in r.items() if k not in ("dataset", "classifier")} for r in f1 if r["dataset"] == dataset},
            "scatter": {
                r["selector"]: {"empirical_p": float(r["empirical_p"]), "avg_rmse": float(r["avg_rmse"])}
                for r in _read_csv(root / "evaluate" / dataset / "scatter.csv")
            },
        }
    return out


def _summary_text(cfg: ExperimentConfig, manifest: dict, summary: dict, cd: dict) -> str:
    lines = [f"run {manifest['config_hash'][:16]}  (aalf {manifest['tool_version']}, seed {cfg.seed})", ""]
    for dataset, info in summary.items():
        lines.append(f"dataset {dataset}: {info['series_kept']} series kept, {info['series_discarded']} discarded, lag {info['lag']}")
        lines.append(f"  oracle floor at p=1 (f only): {info['floor_at_p1']:.4f}")
        lines.append("  pooled F1 on test labels:")
        for clf, row in info["f1"].items():
            lines.append("    " + f"{clf:<4}" + "  ".join(f"p={p}:{v:.3f}" for p, v in row.items()))
        lines.append("  empirical p / average RMSE:")
        for sel, row in sorted(info["scatter"].items(), key=lambda kv: -kv[1]["empirical_p"]):
            lines.append(f"    {sel:<12} p={row['empirical_p']:.3f}  rmse={row['avg_rmse']:.4f}")
        lines.append("")
    if "groups" in cd:
        lines.append(f"Friedman p = {cd['friedman_p']:.3g} over {cd['n_series']} series")
        lines += [f"  not distinguishable: {', '.join(g)}" for g in cd["groups"]] or ["  no groups"]
    return "\n".join(lines) + "\n"


def cmd_report(cfg: ExperimentConfig) -> Path:
    run = Run(cfg)
    run.require("report")
    stages = {}
    for stage in STAGES[:-1]:
        info = json.loads((run.root / stage / "stage.json").read_text())
        stages[stage] = {"files": info["files"], "wall_clock_s": info["wall_clock_s"]}
    manifest = {
        "config_hash": cfg.config_hash(),
        "tool_version": __version__,
        "seed": cfg.seed,
        "stages": stages,
    }
    summary = _summary(run)
    cd = json.loads((run.root / "evaluate" / "cd.json").read_text())
    with run.stage("report") as out:
        _write_json(out / "report.json", {"manifest": manifest, "config": cfg.semantic_dict(), "summary": summary, "cd": cd})
        (out / "summary.txt").write_text(_summary_text(cfg, manifest, summary, cd))
    return run.root / "report"


COMMANDS = {
    "ingest": cmd_ingest,
    "train-base": cmd_train_base,
    "oracle": cmd_oracle,
    "fit-selector": cmd_fit_selector,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def run_all(cfg: ExperimentConfig) -> Path:
    for stage in STAGES:
        COMMANDS[stage](cfg)
    return cfg.run_dir()


__all__ = [
    "COMMANDS",
    "Run",
    "STAGES",
    "cmd_evaluate",
    "cmd_fit_selector",
    "cmd_ingest",
    "cmd_oracle",
    "cmd_report",
    "cmd_train_base",
    "fit_classifier",
    "run_all",
    "selector_name",
]
