"""Chained-equation imputation and missingness mimicry.

The imputer visits each incomplete numeric column in a fixed order
(ascending missing count), regresses it on every other column with a
ridge penalty using training rows only, and replaces the holes with the
prediction plus, when posterior sampling is on, Gaussian noise at the
residual standard deviation. Mean imputation seeds the placeholders and
the chained pass repeats a fixed number of times. Apply-set holes are
filled from the training-fitted models, so nothing leaks backwards.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from trialbench import rng as rngmod
from trialbench.dataset import Dataset, NAProfile
from trialbench.errors import ImputationError


@dataclass(frozen=True)
class MiceConfig:
    n_iterations: int = 10
    ridge: float = 1e-6
    posterior_sampling: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ImputationError("n_iterations must be at least 1")
        if self.ridge < 0:
            raise ImputationError("ridge must be nonnegative")


@dataclass(frozen=True)
class MiceReport:
    """Metadata emitted alongside the completed datasets."""

    visit_order: list
    n_iterations: int
    seed: int
    residual_sd: dict = field(default_factory=dict)

    def to_doc(self):
        return {"visit_order": self.visit_order,
                "n_iterations": self.n_iterations, "seed": self.seed,
                "residual_sd": self.residual_sd}

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_doc(), fh, indent=2)
            fh.write("\n")


def _ridge_fit(A, b, ridge):
    """Least squares with an L2 penalty (intercept unpenalized)."""
    n, d = A.shape
    mean_a = A.mean(axis=0)
    mean_b = b.mean()
    ac = A - mean_a
    bc = b - mean_b
    gram = ac.T @ ac + ridge * np.eye(d)
    coef = np.linalg.solve(gram, ac.T @ bc)
    intercept = mean_b - mean_a @ coef
    return coef, intercept


def mice(train: Dataset, apply: Dataset | None, cfg: MiceConfig) -> tuple:
    """Fill every missing numeric cell; returns (train, apply, report).

    Pass apply=None to impute a single dataset. Non-missing cells are
    untouched. Columns that are entirely missing in the training set
    cannot be regressed and raise (they should have been dropped at the
    NA threshold).
    """
    specs = train.specs
    if apply is not None and tuple(s.name for s in apply.specs) != \
            tuple(s.name for s in specs):
        raise ImputationError("train and apply column sets differ")

    tr_vals = np.array(train.values)
    tr_miss = np.array(train.missing)
    ap_vals = np.array(apply.values) if apply is not None else None
    ap_miss = np.array(apply.missing) if apply is not None else None

    numeric = [j for j, s in enumerate(specs) if s.is_numeric]
    incomplete = [j for j in numeric if tr_miss[:, j].any()
                  or (ap_miss is not None and ap_miss[:, j].any())]
    fully_missing = [specs[j].name for j in numeric if tr_miss[:, j].all()]
    if fully_missing:
        raise ImputationError("column(s) entirely missing in training rows: "
                              f"{fully_missing}; drop them before imputing")
    order = sorted(incomplete, key=lambda j: (int(tr_miss[:, j].sum()), j))

    # placeholder means from observed training cells
    col_means = {}
    for j in order:
        obs = tr_vals[~tr_miss[:, j], j]
        col_means[j] = float(obs.mean())
        tr_vals[tr_miss[:, j], j] = col_means[j]
        if ap_vals is not None:
            ap_vals[ap_miss[:, j], j] = col_means[j]

    # separate noise streams keep training imputations fully independent
    # of the apply set (its holes and its values)
    gen_train = rngmod.spawn(cfg.seed, "mice", "train")
    gen_apply = rngmod.spawn(cfg.seed, "mice", "apply")
    residual_sd = {}
    predictors = {j: [c for c in range(len(specs)) if c != j] for j in order}
    for _ in range(cfg.n_iterations):
        for j in order:
            holes = tr_miss[:, j]
            obs = ~holes
            cols = predictors[j]
            coef, intercept = _ridge_fit(tr_vals[obs][:, cols],
                                         tr_vals[obs, j], cfg.ridge)
            fitted = tr_vals[obs][:, cols] @ coef + intercept
            resid = tr_vals[obs, j] - fitted
            sd = float(np.sqrt(np.mean(resid * resid)))
            residual_sd[specs[j].name] = sd
            if holes.any():
                pred = tr_vals[holes][:, cols] @ coef + intercept
                if cfg.posterior_sampling and sd > 0:
                    pred = pred + gen_train.normal(0.0, sd, size=pred.shape)
                tr_vals[holes, j] = pred
            if ap_vals is not None and ap_miss[:, j].any():
                hol = ap_miss[:, j]
                pred = ap_vals[hol][:, cols] @ coef + intercept
                if cfg.posterior_sampling and sd > 0:
                    pred = pred + gen_apply.normal(0.0, sd, size=pred.shape)
                ap_vals[hol, j] = pred

    done_train = train.with_values(tr_vals, np.zeros_like(tr_miss))
    done_apply = None
    if apply is not None:
        done_apply = apply.with_values(ap_vals, np.zeros_like(ap_miss))
    report = MiceReport(visit_order=[specs[j].name for j in order],
                        n_iterations=cfg.n_iterations, seed=cfg.seed,
                        residual_sd=residual_sd)
    return done_train, done_apply, report


def mimic_missingness(ds: Dataset, profile: NAProfile, seed: int = 0) -> Dataset:
    """Inject missing cells at the per-column rates of a reference profile.

    Each numeric column gets exactly round(rate * n_rows) holes drawn
    uniformly without replacement; categorical and response columns are
    never touched.
    """
    values = np.array(ds.values)
    missing = np.array(ds.missing)
    n = ds.n_rows
    for j, spec in enumerate(ds.specs):
        if not spec.is_numeric or spec.name not in profile.counts:
            continue
        target = int(np.floor(profile.rate(spec.name) * n + 0.5))
        if target == 0:
            continue
        if target > n:
            raise ImputationError(f"column {spec.name!r}: profile requests "
                                  f"{target} holes for {n} rows")
        gen = rngmod.spawn(seed, "mimic", spec.name)
        rows = gen.choice(n, size=target, replace=False)
        missing[rows, j] = True
        values[rows, j] = np.nan
    return ds.with_values(values, missing)
