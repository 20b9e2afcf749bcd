"""Command-line front end.

Subcommands: prepare, impute, bench, select, simulate, report. Every
run writes its resolved configuration and master seed next to its
outputs; re-running from that file reproduces the outputs byte for
byte, independent of --threads.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from trialbench import __version__, metrics, rng as rngmod
from trialbench.config import RunConfig, load_default_config
from trialbench.dataset import (Dataset, NAProfile, load_trials, na_profile,
                                save_trials)
from trialbench.errors import TrialBenchError
from trialbench.featselect import forward_select, greedy_ordering
from trialbench.features import add_engineered_features, load_daily_temperatures
from trialbench.impute import MiceConfig, mice
from trialbench.models import ModelSpec, fit
from trialbench.preprocess import (OneHotEncoder, Standardizer,
                                   drop_high_na_columns, drop_incomplete_rows,
                                   feature_groups, stratified_split)
from trialbench.report import (BENCH_COLUMNS, SELECT_COLUMNS, SIM_COLUMNS,
                               confusion_proportions, read_csv,
                               render_confusion, write_csv)
from trialbench.schema import default_schema, load_schema, save_schema
from trialbench.simstudy import (DEFAULT_STUDY_FAMILIES, ScenarioSpec,
                                 preset_scenarios, run_study,
                                 synthesize_reference)
from trialbench.tuning import grid_search


def _add_common(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, help="worker threads")


def _resolve_config(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = RunConfig.load(args.config)
    else:
        cfg = load_default_config()
    for flag, attr in (("seed", "master_seed"), ("na_threshold", "na_threshold"),
                       ("gdd_formula", "gdd_formula"), ("threads", "threads"),
                       ("replicates", "replicates"), ("rows", "rows")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    if getattr(args, "no_impute", False):
        cfg.impute = False
    if getattr(args, "fraction", None):
        cfg.select_fractions = tuple(args.fraction)
    if getattr(args, "scenario", None):
        cfg.scenarios = tuple(args.scenario)
    if getattr(args, "full_scale", False):
        cfg.full_scale = True
        cfg.replicates = 500
        cfg.rows = 885
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_input(args, cfg) -> Dataset:
    schema = load_schema(args.schema) if args.schema else default_schema()
    ds = load_trials(args.data, schema)
    names = ds.column_names
    if "Ctrl ave" not in names and "Total Yield" in names:
        temps = load_daily_temperatures(args.temps) if getattr(args, "temps", None) \
            else None
        ds = add_engineered_features(ds, temps, cfg.gdd_formula)
    return ds


def _mice_cfg(cfg: RunConfig, seed: int) -> MiceConfig:
    return MiceConfig(n_iterations=cfg.mice_iterations, ridge=cfg.mice_ridge,
                      posterior_sampling=cfg.mice_posterior, seed=seed)


def _pipeline_arms(ds, cfg):
    """Split once, then build the imputed and non-imputed arm datasets."""
    ds = drop_high_na_columns(ds, cfg.na_threshold)
    plan = stratified_split(ds, cfg.train_frac,
                            seed=rngmod.derive_seed(cfg.master_seed, "split"))
    train = ds.select_rows(list(plan.train))
    test = ds.select_rows(list(plan.test))
    arms = {}
    if cfg.impute:
        std = Standardizer.fit(train)
        tr, te = std.transform(train), std.transform(test)
        enc = OneHotEncoder.fit(tr)
        tr, te = enc.transform(tr), enc.transform(te)
        tr, te, mice_report = mice(tr, te, _mice_cfg(
            cfg, rngmod.derive_seed(cfg.master_seed, "mice")))
        arms["imputed"] = (tr, te, mice_report)
    tr_c = drop_incomplete_rows(train)
    te_c = drop_incomplete_rows(test)
    std = Standardizer.fit(tr_c)
    tr_c, te_c = std.transform(tr_c), std.transform(te_c)
    enc = OneHotEncoder.fit(tr_c)
    tr_c, te_c = enc.transform(tr_c), enc.transform(te_c)
    arms["non_imputed"] = (tr_c, te_c, None)
    return plan, arms


# -- subcommands -------------------------------------------------------------


def cmd_prepare(args) -> int:
    cfg = _resolve_config(args)
    out = _outdir(args)
    ds = _load_input(args, cfg)
    profile = na_profile(ds)
    plan, arms = _pipeline_arms(ds, cfg)
    plan.save(out / "splitplan.json")
    profile.save(out / "naprofile.json")
    save_schema(list(ds.specs), out / "schema.resolved.json")
    for arm, (train, test, mice_report) in arms.items():
        save_trials(train, out / f"train_{arm}.csv")
        save_trials(test, out / f"test_{arm}.csv")
        if mice_report is not None:
            mice_report.save(out / "mice_meta.json")
    cfg.save(out / "resolved_config.json")
    print(f"prepared {ds.n_rows} rows, {ds.n_cols} columns -> {out}")
    return 0


def cmd_impute(args) -> int:
    cfg = _resolve_config(args)
    out = _outdir(args)
    schema = load_schema(args.schema) if args.schema else default_schema()
    train = load_trials(args.train, schema)
    test = load_trials(args.test, schema) if args.test else None
    tr, te, report = mice(train, test, _mice_cfg(
        cfg, rngmod.derive_seed(cfg.master_seed, "mice")))
    save_trials(tr, out / "train_imputed.csv")
    if te is not None:
        save_trials(te, out / "test_imputed.csv")
    report.save(out / "mice_meta.json")
    cfg.save(out / "resolved_config.json")
    print(f"imputed -> {out}")
    return 0


def _evaluate_model(model, test, cfg, ci_seed):
    y = np.asarray(test.labels)
    x = test.matrix()
    pred = model.predict(x)
    scores = model.score(x)
    c = metrics.confusion(y, pred)
    try:
        auc = metrics.auc_roc(y, scores)
    except TrialBenchError:
        auc = float("nan")
    ci = metrics.bootstrap_ci(y, pred, metrics.strict_mcc, B=cfg.bootstrap_b,
                              seed=ci_seed)
    return c, metrics.EvalReport(accuracy=metrics.accuracy(c),
                                 f1=metrics.f1(c), mcc=metrics.mcc(c),
                                 auc=auc, mcc_ci=ci, n=c.n)


def cmd_bench(args) -> int:
    cfg = _resolve_config(args)
    out = _outdir(args)
    ds = _load_input(args, cfg)
    _plan, arms = _pipeline_arms(ds, cfg)
    rows = []
    evals = {}
    for arm, (train, test, _r) in arms.items():
        for family in cfg.bench_families:
            result = grid_search(cfg.grid_for(family), train, k=cfg.k_folds,
                                 seed=rngmod.derive_seed(cfg.master_seed, "cv",
                                                         family, arm),
                                 threshold=cfg.threshold, threads=cfg.threads)
            c, rep = _evaluate_model(result.best_model, test, cfg,
                                     rngmod.derive_seed(cfg.master_seed, "ci",
                                                        family, arm))
            rows.append({"Model": family, "Variant": arm,
                         "Test MCC": rep.mcc, "CI lo": rep.mcc_ci[0],
                         "CI hi": rep.mcc_ci[1], "Accuracy": rep.accuracy,
                         "F1": rep.f1, "AUC": rep.auc})
            evals[f"{family}/{arm}"] = {
                "report": rep.to_doc(),
                "confusion": {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn},
                "best_hyperparams": dict(result.best_spec.hyperparams),
                "cv_score": result.best_score}
            print(f"bench {arm:12s} {family:22s} mcc={rep.mcc:+.3f}")
    write_csv(out / "bench.csv", BENCH_COLUMNS, rows)
    with open(out / "bench_evals.json", "w", encoding="utf-8") as fh:
        json.dump(evals, fh, indent=2, sort_keys=True)
        fh.write("\n")
    cfg.save(out / "resolved_config.json")
    return 0


def cmd_select(args) -> int:
    cfg = _resolve_config(args)
    out = _outdir(args)
    ds = _load_input(args, cfg)
    _plan, arms = _pipeline_arms(ds, cfg)
    rows = []
    traces = {}
    max_frac = max(cfg.select_fractions)
    for arm, (train, test, _r) in arms.items():
        y_test = np.asarray(test.labels)
        for family in cfg.select_families:
            result = grid_search(cfg.grid_for(family), train, k=cfg.k_folds,
                                 seed=rngmod.derive_seed(cfg.master_seed, "cv",
                                                         family, arm),
                                 threshold=cfg.threshold, threads=cfg.threads)
            spec = result.best_spec
            n_groups = len(feature_groups(train.specs))
            sel_seed = rngmod.derive_seed(cfg.master_seed, "select", family, arm)
            ordering = greedy_ordering(spec, train,
                                       int(np.ceil(max_frac * n_groups)),
                                       cfg.select_min_gain, seed=sel_seed,
                                       k=cfg.k_folds)
            for fraction in cfg.select_fractions:
                trace = forward_select(spec, train, fraction,
                                       cfg.select_min_gain, seed=sel_seed,
                                       k=cfg.k_folds, ordering=ordering)
                keep = [j for name, group in feature_groups(train.specs)
                        if name in trace.selected for j in group]
                names = [train.specs[j].name for j in keep]
                sub_train = train.select_columns(names)
                sub_test = test.select_columns(names)
                model = fit(spec, sub_train.matrix(),
                            np.asarray(train.labels))
                c = metrics.confusion(y_test, model.predict(sub_test.matrix()))
                rows.append({"Fraction": fraction, "Model": family,
                             "Variant": arm,
                             "Accuracy": metrics.accuracy(c),
                             "F1": metrics.f1(c), "MCC": metrics.mcc(c)})
                traces[f"{family}/{arm}/{fraction}"] = trace.to_doc()
                print(f"select {arm:12s} {family:10s} frac={fraction}: "
                      f"{len(trace.selected)} features")
    write_csv(out / "select.csv", SELECT_COLUMNS, rows)
    with open(out / "select_traces.json", "w", encoding="utf-8") as fh:
        json.dump(traces, fh, indent=2, sort_keys=True)
        fh.write("\n")
    cfg.save(out / "resolved_config.json")
    return 0


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    out = _outdir(args)
    schema = load_schema(args.schema) if args.schema else default_schema()
    if args.data:
        reference = load_trials(args.data, schema)
    else:
        reference = synthesize_reference(
            schema, n_rows=885,
            seed=rngmod.derive_seed(cfg.master_seed, "reference"))
    profile = NAProfile({s.name: s.expected_na for s in schema
                         if s.kind != "response"}, 885)
    keep = [s.name for s in reference.specs
            if profile.counts.get(s.name, 0) <= cfg.na_threshold]
    reference = reference.select_columns(keep)
    scenarios = [s for s in preset_scenarios(n_rows=cfg.rows,
                                             n_replicates=cfg.replicates)
                 if s.name in cfg.scenarios]
    unknown = set(cfg.scenarios) - {s.name for s in scenarios}
    if unknown:
        raise TrialBenchError(f"unknown scenario name(s): {sorted(unknown)}")
    grids = {family: cfg.grid_for(family, study=True)
             for family in cfg.study_families}
    result = run_study(scenarios, reference, grids,
                       families=tuple(cfg.study_families),
                       master_seed=cfg.master_seed, k_folds=cfg.k_folds,
                       mice_cfg=_mice_cfg(cfg, 0), na_profile=profile,
                       train_frac=cfg.train_frac, threads=cfg.threads)
    write_csv(out / "simulate.csv", SIM_COLUMNS, result.table())
    write_csv(out / "replicates.csv",
              ("scenario", "replicate", "model", "tp", "fp", "fn", "tn",
               "roc", "mcc"), result.replicate_log)
    cfg.save(out / "resolved_config.json")
    print(f"simulated {len(scenarios)} scenario(s) x {cfg.replicates} "
          f"replicates -> {out}")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    found = False
    bench_path = out / "bench.csv"
    if bench_path.exists():
        found = True
        print("== model comparison ==")
        evals = {}
        evals_path = out / "bench_evals.json"
        if evals_path.exists():
            with open(evals_path, encoding="utf-8") as fh:
                evals = json.load(fh)
        for row in read_csv(bench_path):
            print(f"{row['Model']:22s} {row['Variant']:12s} "
                  f"Test MCC {row['Test MCC']} "
                  f"CI ({row['CI lo']}, {row['CI hi']})")
            key = f"{row['Model']}/{row['Variant']}"
            if key in evals:
                c = metrics.ConfusionCounts(**evals[key]["confusion"])
                print(render_confusion(c, "row_proportions"))
    select_path = out / "select.csv"
    if select_path.exists():
        found = True
        print("== forward selection ==")
        for row in read_csv(select_path):
            print(f"frac {row['Fraction']:>4s} {row['Model']:10s} "
                  f"{row['Variant']:12s} acc {row['Accuracy']} "
                  f"f1 {row['F1']} mcc {row['MCC']}")
    sim_path = out / "simulate.csv"
    if sim_path.exists():
        found = True
        print("== simulation study ==")
        for row in read_csv(sim_path):
            print(f"{row['TRIAL']:16s} {row['MODEL']:22s} TP {row['TP']} "
                  f"FP {row['FP']} FN {row['FN']} TN {row['TN']} "
                  f"ROC {row['ROC']} MCC {row['MCC']} SE {row['SE']}")
    if not found:
        raise TrialBenchError(f"no bench.csv, select.csv or simulate.csv in {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trialbench",
        description="Selection-trial classification benchmark engine")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="engineer, encode and split a trial sheet")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--temps", help="daily temperature CSV for GDD features")
    p.add_argument("--na-threshold", type=int, dest="na_threshold")
    p.add_argument("--gdd-formula", choices=("mean", "paper-literal"),
                   dest="gdd_formula")
    _add_common(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("impute", help="fill missing cells by chained equations")
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--schema")
    _add_common(p)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("bench", help="grid-search and evaluate all families")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--temps")
    p.add_argument("--na-threshold", type=int, dest="na_threshold")
    p.add_argument("--gdd-formula", choices=("mean", "paper-literal"),
                   dest="gdd_formula")
    p.add_argument("--no-impute", action="store_true", dest="no_impute")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("select", help="forward feature selection at fixed fractions")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--temps")
    p.add_argument("--na-threshold", type=int, dest="na_threshold")
    p.add_argument("--gdd-formula", choices=("mean", "paper-literal"),
                   dest="gdd_formula")
    p.add_argument("--no-impute", action="store_true", dest="no_impute")
    p.add_argument("--fraction", type=float, action="append",
                   help="inclusion fraction (repeatable)")
    _add_common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="scenario-driven simulation study")
    p.add_argument("--data", help="reference sheet; synthesized when absent")
    p.add_argument("--schema")
    p.add_argument("--scenario", action="append",
                   help="scenario name (repeatable; default all four)")
    p.add_argument("--replicates", type=int)
    p.add_argument("--rows", type=int)
    p.add_argument("--na-threshold", type=int, dest="na_threshold")
    p.add_argument("--full-scale", action="store_true", dest="full_scale",
                   help="500 replicates of 885 rows")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="summarize a results directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrialBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
