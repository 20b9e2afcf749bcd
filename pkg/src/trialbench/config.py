"""Run configuration: one JSON document that makes every run replayable.

Each subcommand resolves its configuration (file, flags, defaults, in
that order of increasing precedence), writes the resolved document next
to its outputs, and a re-run from that document reproduces the outputs
byte for byte.
"""

import json
import os
from dataclasses import asdict, dataclass, field

from trialbench.errors import ConfigError
from trialbench.tuning import GridSpec, default_grids, desk_grids

ENV_CONFIG = "TRIALBENCH_CONFIG"

ALL_FAMILIES = ("knn", "gp_laplace", "gaussian_nb", "qda", "decision_tree",
                "adaboost", "random_forest", "mlp_bfgs", "hgbc", "svm_rbf",
                "stacking", "logistic_regression")
TOP_FAMILIES = ("mlp_bfgs", "hgbc", "svm_rbf")
STUDY_FAMILIES = ("hgbc", "svm_rbf", "logistic_regression")


@dataclass
class RunConfig:
    master_seed: int = 0
    na_threshold: int = 400
    train_frac: float = 0.8
    k_folds: int = 5
    gdd_formula: str = "mean"
    threshold: float = 0.5
    impute: bool = True
    mice_iterations: int = 10
    mice_ridge: float = 1e-6
    mice_posterior: bool = True
    grids: dict = field(default_factory=lambda: {
        name: g.to_doc() for name, g in default_grids().items()})
    study_grids: dict = field(default_factory=lambda: {
        name: g.to_doc() for name, g in desk_grids().items()})
    bench_families: tuple = ALL_FAMILIES
    select_families: tuple = TOP_FAMILIES
    select_fractions: tuple = (0.1, 0.3, 0.5, 0.7, 0.9)
    select_min_gain: float = 1e-4
    study_families: tuple = STUDY_FAMILIES
    scenarios: tuple = ("normal_uniform", "normal_beta", "gamma_uniform",
                        "gamma_beta")
    replicates: int = 20
    rows: int = 200
    full_scale: bool = False
    threads: int = 1
    bootstrap_b: int = 1000

    def grid_for(self, family: str, study: bool = False) -> GridSpec:
        table = self.study_grids if study else self.grids
        if family in table:
            return GridSpec.from_doc(table[family])
        if family in self.grids:
            return GridSpec.from_doc(self.grids[family])
        raise ConfigError(f"no grid configured for family {family!r}")

    def to_doc(self) -> dict:
        doc = asdict(self)
        for key in ("bench_families", "select_families", "select_fractions",
                    "study_families", "scenarios"):
            doc[key] = list(doc[key])
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        for key in ("bench_families", "select_families", "select_fractions",
                    "study_families", "scenarios"):
            setattr(cfg, key, tuple(getattr(cfg, key)))
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_doc(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_doc(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_default_config() -> RunConfig:
    path = os.environ.get(ENV_CONFIG)
    if path:
        return RunConfig.load(path)
    return RunConfig()
