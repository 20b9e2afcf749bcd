"""Simulation study engine (ADEMP style).

Scenario-driven synthetic datasets: each column's sampling family is
chosen by its declared kind (mass columns from a normal or gamma
family, counts from Poisson at the reference mean, ratings from uniform
or rescaled beta, categoricals resampled empirically), labels come from
a declared logistic mechanism calibrated to a target positive rate, and
missingness is injected by mimicking a reference NA profile. Replicates
are seed-keyed by index, so serial and parallel runs agree exactly.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from trialbench import metrics, rng as rngmod
from trialbench.dataset import Dataset, NAProfile, RowKey
from trialbench.errors import (GenerationError, ScenarioError,
                               StratificationError, UndefinedMetricError)
from trialbench.impute import MiceConfig, mice, mimic_missingness
from trialbench.models.logistic import sigmoid
from trialbench.preprocess import (OneHotEncoder, Standardizer,
                                   stratified_split)
from trialbench.tuning import grid_search

_LEGAL_FAMILIES = {"mass": ("normal", "gamma"),
                   "derived": ("normal", "gamma"),
                   "count": ("poisson",),
                   "rating": ("uniform", "beta")}

DEFAULT_STUDY_FAMILIES = ("mlp_bfgs", "hgbc", "svm_rbf", "logistic_regression")


def sample_column(kind: str, family: str, params: dict, n: int, seed: int) -> np.ndarray:
    """n i.i.d. draws for one column; the (kind, family) pair must be legal.

    params: normal wants mu/sigma; gamma wants k/theta; poisson wants mu;
    uniform wants lo/hi; beta wants a/b plus lo/hi to rescale into.
    """
    if family not in _LEGAL_FAMILIES.get(kind, ()):
        raise ScenarioError(f"family {family!r} is not legal for kind {kind!r}")
    gen = rngmod.spawn(seed, "sample-column")
    if family == "normal":
        return gen.normal(params["mu"], max(params["sigma"], 0.0), size=n)
    if family == "gamma":
        return gen.gamma(params["k"], params["theta"], size=n)
    if family == "poisson":
        return gen.poisson(max(params["mu"], 0.0), size=n).astype(np.float64)
    if family == "uniform":
        return gen.uniform(params["lo"], params["hi"], size=n)
    raw = gen.beta(params["a"], params["b"], size=n)
    return params["lo"] + (params["hi"] - params["lo"]) * raw


@dataclass(frozen=True)
class LabelMechanism:
    """Declared labeling rule for synthetic rows.

    logistic_nonlinear scores a sparse linear term over `sparsity`
    standardized features plus `n_interactions` pairwise products with
    heavier coefficients, so tree/kernel models have signal a linear
    model cannot fully express; logistic_linear drops the interactions.
    The intercept is calibrated per scenario by bisection to the target
    positive rate.
    """

    kind: str = "logistic_nonlinear"
    sparsity: int = 8
    n_interactions: int = 3
    target_positive_rate: float = 0.12
    signal_scale: float = 4.0
    max_feature_na_rate: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("logistic_linear", "logistic_nonlinear"):
            raise ScenarioError(f"unknown label mechanism {self.kind!r}")
        if not 0.0 < self.target_positive_rate < 1.0:
            raise ScenarioError("target positive rate must be in (0, 1)")
        if self.signal_scale <= 0:
            raise ScenarioError("signal_scale must be positive")

    def to_doc(self):
        return {"kind": self.kind, "sparsity": self.sparsity,
                "n_interactions": self.n_interactions,
                "target_positive_rate": self.target_positive_rate,
                "signal_scale": self.signal_scale,
                "max_feature_na_rate": self.max_feature_na_rate,
                "seed": self.seed}


@dataclass(frozen=True)
class CalibratedLabeler:
    """LabelMechanism resolved against one scenario's distributions."""

    feature_names: tuple
    linear_coef: np.ndarray
    pairs: tuple                 # ((i, j, coef), ...) indices into feature_names
    mean: np.ndarray
    sd: np.ndarray
    intercept: float
    target_positive_rate: float

    def probabilities(self, columns: dict) -> np.ndarray:
        z = [(np.asarray(columns[name]) - m) / s for name, m, s in
             zip(self.feature_names, self.mean, self.sd)]
        score = sum(c * zi for c, zi in zip(self.linear_coef, z))
        for i, j, coef in self.pairs:
            score = score + coef * z[i] * z[j]
        return sigmoid(score + self.intercept)

    def draw(self, columns: dict, gen) -> np.ndarray:
        p = self.probabilities(columns)
        return (gen.random(p.size) < p).astype(np.int8)


@dataclass(frozen=True)
class ScenarioSpec:
    """One data-generating recipe."""

    name: str
    mass_family: str = "normal"
    rating_family: str = "uniform"
    count_family: str = "poisson"
    n_rows: int = 885
    n_replicates: int = 500
    gamma_k: float = 2.0
    gamma_theta: float = 2.0
    beta_a: float = 2.0
    beta_b: float = 5.0
    label_mechanism: LabelMechanism = field(default_factory=LabelMechanism)

    def __post_init__(self):
        if self.mass_family not in _LEGAL_FAMILIES["mass"]:
            raise ScenarioError(f"mass family {self.mass_family!r} illegal")
        if self.rating_family not in _LEGAL_FAMILIES["rating"]:
            raise ScenarioError(f"rating family {self.rating_family!r} illegal")
        if self.count_family != "poisson":
            raise ScenarioError(f"count family {self.count_family!r} illegal")

    def column_family(self, kind: str) -> str:
        if kind in ("mass", "derived"):
            return self.mass_family
        if kind == "count":
            return self.count_family
        if kind == "rating":
            return self.rating_family
        raise ScenarioError(f"no sampling family for kind {kind!r}")

    def to_doc(self):
        return {"name": self.name, "mass_family": self.mass_family,
                "rating_family": self.rating_family,
                "count_family": self.count_family, "n_rows": self.n_rows,
                "n_replicates": self.n_replicates,
                "gamma": [self.gamma_k, self.gamma_theta],
                "beta": [self.beta_a, self.beta_b],
                "label_mechanism": self.label_mechanism.to_doc()}


def preset_scenarios(**overrides) -> list[ScenarioSpec]:
    """The four standard scenarios (mass family x rating family)."""
    out = []
    for mass in ("normal", "gamma"):
        for rating in ("uniform", "beta"):
            out.append(ScenarioSpec(name=f"{mass}_{rating}", mass_family=mass,
                                    rating_family=rating, **overrides))
    return out


# -- reference statistics ----------------------------------------------------


def _column_stats(reference: Dataset, name: str) -> dict:
    j = reference.col_index(name)
    observed = reference.values[~reference.missing[:, j], j]
    if observed.size == 0:
        raise GenerationError(f"reference column {name!r} has no observed cells")
    return {"mu": float(observed.mean()), "sigma": float(observed.std()),
            "lo": float(observed.min()), "hi": float(observed.max())}


def _column_params(scn: ScenarioSpec, kind: str, stats: dict) -> tuple[str, dict]:
    family = scn.column_family(kind)
    if family == "normal":
        return family, {"mu": stats["mu"], "sigma": stats["sigma"]}
    if family == "gamma":
        return family, {"k": scn.gamma_k, "theta": scn.gamma_theta}
    if family == "poisson":
        return family, {"mu": stats["mu"]}
    if family == "uniform":
        return family, {"lo": stats["lo"], "hi": stats["hi"]}
    return family, {"a": scn.beta_a, "b": scn.beta_b,
                    "lo": stats["lo"], "hi": stats["hi"]}


def calibrate_labeler(scn: ScenarioSpec, reference: Dataset,
                      na_profile: NAProfile | None = None,
                      n_calibration: int = 100_000) -> CalibratedLabeler:
    """Resolve the scenario's label mechanism: features, coefficients,
    standardization moments and the bisected intercept.

    When a missingness profile is given, candidate features are limited
    to columns expected to stay mostly observed (rate at most
    max_feature_na_rate), so the planted signal is not drowned by
    imputation noise.
    """
    mech = scn.label_mechanism
    numeric = [s.name for s in reference.specs if s.is_numeric]
    if na_profile is not None:
        mostly_observed = [n for n in numeric
                           if na_profile.rate(n) <= mech.max_feature_na_rate]
        if len(mostly_observed) >= mech.sparsity:
            numeric = mostly_observed
    if len(numeric) < mech.sparsity:
        raise ScenarioError(f"mechanism wants {mech.sparsity} features, "
                            f"reference has {len(numeric)} numeric columns")
    gen = rngmod.spawn(mech.seed, "label-mechanism")
    chosen = sorted(gen.choice(len(numeric), size=mech.sparsity, replace=False))
    names = tuple(numeric[i] for i in chosen)
    if mech.kind == "logistic_nonlinear":
        # interactions ring over a small core of features that also carry
        # aligned linear terms: a linear boundary captures part of the
        # boosted octant, while the interaction surplus (including the
        # mirror cell) is only reachable by nonlinear models; the core
        # prefers nearly complete columns so the planted signal survives
        # imputation
        linear = gen.choice((-1.0, 1.0), mech.sparsity) * gen.uniform(
            0.05, 0.1, mech.sparsity)
        core_size = min(max(mech.n_interactions, 2), mech.sparsity)
        core_rank = sorted(range(mech.sparsity),
                           key=lambda i: (na_profile.rate(names[i])
                                          if na_profile is not None else 0.0,
                                          i))
        core = np.array(core_rank[:core_size])[gen.permutation(core_size)]
        linear[core] = gen.uniform(0.35, 0.45, core_size)
        pair_coef = gen.uniform(0.8, 0.95, mech.n_interactions)
        pairs = tuple((int(core[p % len(core)]),
                       int(core[(p + 1) % len(core)]), float(pair_coef[p]))
                      for p in range(mech.n_interactions))
        linear = linear * mech.signal_scale
        pairs = tuple((i, j, coef * mech.signal_scale) for i, j, coef in pairs)
    else:
        linear = gen.choice((-1.0, 1.0), mech.sparsity) * gen.uniform(
            0.8, 1.5, mech.sparsity) * mech.signal_scale
        pairs = ()

    cal_seed = rngmod.derive_seed(mech.seed, "calibrate", scn.name)
    columns = {}
    for idx, name in enumerate(names):
        spec = reference.spec(name)
        family, params = _column_params(scn, spec.kind, _column_stats(reference, name))
        columns[name] = sample_column(spec.kind, family, params, n_calibration,
                                      rngmod.derive_seed(cal_seed, "col", name))
    mean = np.array([columns[n].mean() for n in names])
    sd = np.array([max(columns[n].std(), 1e-9) for n in names])

    z = [(columns[n] - m) / s for n, m, s in zip(names, mean, sd)]
    score = sum(c * zi for c, zi in zip(linear, z))
    for i, j, coef in pairs:
        score = score + coef * z[i] * z[j]
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if float(sigmoid(score + mid).mean()) < mech.target_positive_rate:
            lo = mid
        else:
            hi = mid
    intercept = (lo + hi) / 2.0
    return CalibratedLabeler(names, np.asarray(linear), pairs, mean, sd,
                             float(intercept), mech.target_positive_rate)


def synthesize_reference(schema, n_rows: int = 885, seed: int = 0) -> Dataset:
    """Self-contained reference dataset drawn from the schema's ranges.

    Stands in when no empirical sheet is available: numeric columns are
    uniform over their declared range, categoricals uniform over their
    levels. Supplies the per-column statistics the scenarios need.
    """
    gen = rngmod.spawn(seed, "synthesize-reference")
    specs = [s for s in schema if s.kind != "response"]
    cols = []
    for spec in specs:
        if spec.kind == "categorical":
            cols.append(gen.integers(0, len(spec.levels), n_rows).astype(float))
            continue
        if spec.range is None:
            raise GenerationError(f"column {spec.name!r} declares no range; "
                                  "cannot synthesize a reference")
        lo, hi = spec.range
        cols.append(gen.uniform(lo, hi, n_rows))
    values = np.column_stack(cols)
    keys = tuple(RowKey(2000, "HER", "early", f"ref{i:05d}")
                 for i in range(n_rows))
    return Dataset(specs=tuple(specs), values=values,
                   missing=np.zeros_like(values, dtype=bool), keys=keys)


def make_dataset(scn: ScenarioSpec, reference: Dataset, replicate_index: int,
                 labeler: CalibratedLabeler, na_profile: NAProfile | None,
                 master_seed: int) -> Dataset:
    """One synthetic replicate: features, labels, then injected holes."""
    n = scn.n_rows
    cols = []
    columns_by_name = {}
    for spec in reference.specs:
        label = ("simulate", scn.name, replicate_index, "col", spec.name)
        if spec.kind == "categorical":
            j = reference.col_index(spec.name)
            codes = reference.values[:, j].astype(int)
            gen = rngmod.spawn(master_seed, *label)
            col = codes[gen.integers(0, codes.size, n)].astype(float)
        else:
            family, params = _column_params(scn, spec.kind,
                                            _column_stats(reference, spec.name))
            col = sample_column(spec.kind, family, params, n,
                                rngmod.derive_seed(master_seed, *label))
        cols.append(col)
        columns_by_name[spec.name] = col
    values = np.column_stack(cols)
    label_gen = rngmod.spawn(master_seed, "simulate", scn.name,
                             replicate_index, "labels")
    labels = labeler.draw({name: columns_by_name[name]
                           for name in labeler.feature_names}, label_gen)
    keys = tuple(RowKey(2000 + replicate_index % 100, "SIM", "early",
                        f"sim{i:05d}") for i in range(n))
    ds = Dataset(specs=reference.specs, values=values,
                 missing=np.zeros_like(values, dtype=bool), keys=keys,
                 labels=labels)
    if na_profile is not None:
        ds = mimic_missingness(ds, na_profile,
                               seed=rngmod.derive_seed(master_seed, "simulate",
                                                       scn.name,
                                                       replicate_index,
                                                       "missing"))
    return ds


# -- study orchestration -----------------------------------------------------


@dataclass(frozen=True)
class StudyResult:
    """Aggregated metrics per (scenario, model) plus the replicate log."""

    rows: list            # dicts: scenario, model, tp, fp, fn, tn, roc, mcc, se
    replicate_log: list   # dicts: scenario, replicate, model, counts, roc, mcc
    n_regenerated: int

    def table(self):
        """Rows in the aggregate CSV layout (TRIAL .. SE)."""
        return [{"TRIAL": r["scenario"], "MODEL": r["model"], "TP": r["tp"],
                 "FP": r["fp"], "FN": r["fn"], "TN": r["tn"], "ROC": r["roc"],
                 "MCC": r["mcc"], "SE": r["se"]} for r in self.rows]


def _replicate_pipeline(scn, reference, labeler, na_profile, families, grids,
                        master_seed, replicate_index, k_folds, mice_cfg,
                        train_frac, max_attempts=10):
    """Generate one replicate and evaluate every family on its test split.

    A replicate whose labels cannot be stratified (degenerate class) is
    regenerated under the next derived attempt seed; the attempt count
    travels back to the aggregate report.
    """
    attempt = 0
    while True:
        seed_labels = (scn.name, replicate_index, attempt)
        effective_index = replicate_index if attempt == 0 else \
            rngmod.derive_seed(master_seed, "regen", *seed_labels) % (2 ** 31)
        ds = make_dataset(scn, reference, effective_index, labeler,
                          na_profile, master_seed)
        try:
            plan = stratified_split(ds, train_frac=train_frac,
                                    seed=rngmod.derive_seed(
                                        master_seed, "split", *seed_labels))
            break
        except StratificationError:
            attempt += 1
            if attempt >= max_attempts:
                raise
    train = ds.select_rows(list(plan.train))
    test = ds.select_rows(list(plan.test))
    std = Standardizer.fit(train)
    train = std.transform(train)
    test = std.transform(test)
    encoder = OneHotEncoder.fit(train)
    train = encoder.transform(train)
    test = encoder.transform(test)
    cfg = replace(mice_cfg, seed=rngmod.derive_seed(master_seed, "mice",
                                                    *seed_labels))
    train, test, _report = mice(train, test, cfg)
    y_test = np.asarray(test.labels)
    x_test = test.matrix()
    out = []
    for family in families:
        result = grid_search(grids[family], train, k=k_folds,
                             seed=rngmod.derive_seed(master_seed, "cv",
                                                     family, *seed_labels))
        pred = result.best_model.predict(x_test)
        scores = result.best_model.score(x_test)
        c = metrics.confusion(y_test, pred)
        try:
            roc = metrics.auc_roc(y_test, scores)
        except UndefinedMetricError:
            roc = float("nan")
        out.append({"scenario": scn.name, "replicate": replicate_index,
                    "model": family, "tp": c.tp, "fp": c.fp, "fn": c.fn,
                    "tn": c.tn, "roc": roc,
                    "mcc": metrics.mcc(c)})
    return out, attempt


def run_study(scenarios, reference: Dataset, grids: dict,
              families=DEFAULT_STUDY_FAMILIES, n_replicates: int | None = None,
              master_seed: int = 0, k_folds: int = 5,
              mice_cfg: MiceConfig = MiceConfig(),
              na_profile: NAProfile | None = None, train_frac: float = 0.8,
              threads: int = 1) -> StudyResult:
    """Run every scenario for n_replicates and aggregate per (scenario, model).

    Aggregation is a deterministic fold in replicate-index order; with
    threads > 1 replicates are evaluated concurrently but assembled by
    index, so the output is identical either way.
    """
    log = []
    rows = []
    n_regenerated = 0
    for scn in scenarios:
        reps = scn.n_replicates if n_replicates is None else n_replicates
        labeler = calibrate_labeler(scn, reference, na_profile)

        def one(idx, _scn=scn, _labeler=labeler):
            return _replicate_pipeline(_scn, reference, _labeler, na_profile,
                                       families, grids, master_seed, idx,
                                       k_folds, mice_cfg, train_frac)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, range(reps)))
        else:
            results = [one(idx) for idx in range(reps)]

        per_model = {family: [] for family in families}
        for replicate_rows, attempts in results:
            n_regenerated += attempts
            log.extend(replicate_rows)
            for row in replicate_rows:
                per_model[row["model"]].append(row)
        for family in families:
            entries = per_model[family]
            mccs = [e["mcc"] for e in entries]
            rows.append({
                "scenario": scn.name, "model": family,
                "tp": float(np.mean([e["tp"] for e in entries])),
                "fp": float(np.mean([e["fp"] for e in entries])),
                "fn": float(np.mean([e["fn"] for e in entries])),
                "tn": float(np.mean([e["tn"] for e in entries])),
                "roc": float(np.nanmean([e["roc"] for e in entries])),
                "mcc": float(np.mean(mccs)),
                "se": metrics.se_over_replicates(mccs) if len(mccs) > 1
                      else float("nan"),
                "n_replicates": len(entries)})
    return StudyResult(rows=rows, replicate_log=log,
                       n_regenerated=n_regenerated)
