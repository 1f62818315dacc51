"""Experiment configuration: TOML schema, strict validation, presets.

Unknown keys are errors, not warnings; every random stream flows from the
four named seeds (data, mask, model, split) so runs are reproducible
byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from . import models as M
from .dataset import DEFAULT_REGRESSORS
from .errors import ConfigError

CONFIG_VERSION = 1

_PATTERN_ALIASES = {
    "mar_pure": "MAR_PURE",
    "mar_mnar": "MAR_MNAR",
    "mnar_pure": "MNAR_PURE",
}


@dataclass(frozen=True)
class PatternSpec:
    kind: str              # "mcar" or one of the conditional patterns
    share: float = 0.5     # missing share (mcar) / target share (conditional)

    @property
    def label(self) -> str:
        if self.kind == "mcar":
            return f"MCAR{int(round(self.share * 100)):02d}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "PatternSpec":
        t = text.strip().lower()
        if t.startswith("mcar"):
            _, _, sharetxt = t.partition(":")
            if not sharetxt:
                raise ConfigError(
                    f"pattern {text!r}: mcar needs a share, e.g. 'mcar:0.5'")
            try:
                share = float(sharetxt)
            except ValueError:
                raise ConfigError(f"pattern {text!r}: bad share") from None
            if not 0.0 <= share <= 1.0:
                raise ConfigError(f"pattern {text!r}: share outside [0,1]")
            return cls("mcar", share)
        if t in _PATTERN_ALIASES:
            return cls(_PATTERN_ALIASES[t])
        raise ConfigError(
            f"unknown pattern {text!r}; use mcar:<share>, mar_pure, "
            "mar_mnar or mnar_pure")


@dataclass
class ExperimentConfig:
    source: str = "synthetic"          # synthetic | csv
    n: int = 7062
    csv_path: str | None = None
    noise_sd: float | None = None
    seeds: dict = field(default_factory=dict)   # data/mask/model/split
    patterns: list = field(default_factory=list)
    models: list = field(default_factory=list)  # model codes
    lines: list = field(default_factory=lambda: [0.5])
    cutpoints: list = field(default_factory=lambda: [0.5])
    predict_on: str = "missing"        # missing | all
    error_adjust: bool = False
    error_draws: int = 100
    cdf: str = "first"                 # none | first | all
    hyper: M.HyperParams = field(default_factory=M.HyperParams)
    regressors: tuple = DEFAULT_REGRESSORS
    grid_families: list = field(default_factory=list)
    grid_target: str = M.CONTINUOUS
    grid_line: float = 0.5
    grid_preset: str = "desk"          # desk | full
    grid_axes: dict | None = None

    def config_hash_material(self) -> str:
        doc = asdict(self)
        doc["hyper"] = asdict(self.hyper)
        doc["patterns"] = [p.label for p in self.patterns]
        return json.dumps(doc, sort_keys=True, default=str)


_SCHEMA = {
    "config_version": None,
    "data": {"source", "n", "path", "noise_sd"},
    "seeds": {"data", "mask", "model", "split"},
    "experiment": {"patterns", "models", "lines", "cutpoints", "predict_on",
                   "error_adjust", "error_draws", "cdf"},
    "hyper": {"rf", "en", "mlp", "logit"},
    "regressors": {"order"},
    "grid": {"families", "target", "line", "preset", "axes"},
}

_HYPER_FIELDS = {
    "rf": {"trees", "mtry", "max_depth", "min_leaf"},
    "en": {"alpha", "lambda_grid_size", "cv_folds"},
    "mlp": {"layer1", "layer2", "learning_rate", "batch_size", "epochs",
            "max_restarts", "bias"},
    "logit": {"max_iter", "tol"},
}

_GRID_FAMILY_ALIASES = {
    "rf": M.RANDOM_FOREST, "random_forest": M.RANDOM_FOREST,
    "en": M.ELASTIC_NET, "elastic_net": M.ELASTIC_NET,
    "mlp": M.MLP2, "mlp2": M.MLP2,
}


def _check_keys(section, got, allowed):
    unknown = set(got) - allowed
    if unknown:
        raise ConfigError(
            f"[{section}] has unknown key(s): {sorted(unknown)}")


def parse_config_file(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return parse_config(doc, origin=str(path))


def parse_config(doc: dict, origin="<config>") -> ExperimentConfig:
    _check_keys(origin, doc, set(_SCHEMA))
    version = doc.get("config_version")
    if version != CONFIG_VERSION:
        raise ConfigError(
            f"{origin}: config_version must be {CONFIG_VERSION}, got {version!r}")

    cfg = ExperimentConfig()

    data = doc.get("data", {})
    _check_keys("data", data, _SCHEMA["data"])
    cfg.source = data.get("source", "synthetic")
    if cfg.source not in ("synthetic", "csv"):
        raise ConfigError(f"data.source must be synthetic or csv, got {cfg.source!r}")
    cfg.n = int(data.get("n", 7062))
    cfg.csv_path = data.get("path")
    cfg.noise_sd = data.get("noise_sd")
    if cfg.source == "csv" and not cfg.csv_path:
        raise ConfigError("data.path is required when data.source = 'csv'")

    seeds = doc.get("seeds")
    if not seeds:
        raise ConfigError("[seeds] section with data/mask/model/split is required")
    _check_keys("seeds", seeds, _SCHEMA["seeds"])
    for name in ("data", "mask", "model", "split"):
        if name not in seeds:
            raise ConfigError(f"seeds.{name} is required (explicit seeding only)")
        if not isinstance(seeds[name], int):
            raise ConfigError(f"seeds.{name} must be an integer")
    cfg.seeds = dict(seeds)

    exp = doc.get("experiment", {})
    _check_keys("experiment", exp, _SCHEMA["experiment"])
    cfg.patterns = [PatternSpec.parse(p) for p in exp.get("patterns", ["mcar:0.0"])]
    cfg.models = list(exp.get("models", list(M.ALL_CODES)))
    for code in cfg.models:
        if code not in M.CODE_TO_SPEC:
            raise ConfigError(f"unknown model code {code!r} in experiment.models")
    if not cfg.models or not cfg.patterns:
        raise ConfigError("need at least one model and one pattern")
    cfg.lines = [float(q) for q in exp.get("lines", [0.5])]
    if not cfg.lines:
        raise ConfigError("need at least one poverty line")
    for q in cfg.lines:
        if not 0.0 < q < 1.0:
            raise ConfigError(f"poverty-line quantile {q} outside (0,1)")
    cuts = exp.get("cutpoints", [0.5])
    cfg.cutpoints = []
    for c in cuts:
        if isinstance(c, str):
            if c.lower() != "youden":
                raise ConfigError(f"cutpoint {c!r} must be a number or 'youden'")
            cfg.cutpoints.append("youden")
        else:
            c = float(c)
            if not 0.0 < c < 1.0:
                raise ConfigError(f"cutpoint {c} outside (0,1)")
            cfg.cutpoints.append(c)
    cfg.predict_on = exp.get("predict_on", "missing")
    if cfg.predict_on not in ("missing", "all"):
        raise ConfigError("experiment.predict_on must be 'missing' or 'all'")
    cfg.error_adjust = bool(exp.get("error_adjust", False))
    cfg.error_draws = int(exp.get("error_draws", 100))
    cfg.cdf = exp.get("cdf", "first")
    if cfg.cdf not in ("none", "first", "all"):
        raise ConfigError("experiment.cdf must be none, first or all")

    hyper = doc.get("hyper", {})
    _check_keys("hyper", hyper, _SCHEMA["hyper"])
    hp = M.HyperParams()
    for block, fields_ in _HYPER_FIELDS.items():
        sub = hyper.get(block, {})
        _check_keys(f"hyper.{block}", sub, fields_)
        if not sub:
            continue
        if block == "rf":
            hp = M.with_rf(hp, **sub)
        elif block == "en":
            hp = M.with_en(hp, **sub)
        elif block == "mlp":
            hp = M.with_mlp(hp, **sub)
        else:
            from dataclasses import replace
            hp = replace(hp, logit=M.LogitParams(**sub))
    cfg.hyper = hp

    reg = doc.get("regressors", {})
    _check_keys("regressors", reg, _SCHEMA["regressors"])
    if "order" in reg:
        cfg.regressors = tuple(reg["order"])

    grid = doc.get("grid", {})
    _check_keys("grid", grid, _SCHEMA["grid"])
    fams = grid.get("families", ["rf", "en", "mlp"])
    cfg.grid_families = []
    for f in fams:
        key = str(f).lower()
        if key not in _GRID_FAMILY_ALIASES:
            raise ConfigError(f"unknown grid family {f!r}")
        cfg.grid_families.append(_GRID_FAMILY_ALIASES[key])
    target = grid.get("target", "continuous").upper()
    if target not in (M.CONTINUOUS, M.CATEGORICAL):
        raise ConfigError("grid.target must be continuous or categorical")
    cfg.grid_target = target
    cfg.grid_line = float(grid.get("line", 0.5))
    cfg.grid_preset = grid.get("preset", "desk")
    if cfg.grid_preset not in ("desk", "full"):
        raise ConfigError("grid.preset must be desk or full")
    cfg.grid_axes = grid.get("axes")
    return cfg


# -- presets ---------------------------------------------------------------------


def preset(name: str) -> dict:
    """Built-in config documents for the CLI --preset flag."""
    if name == "baseline":
        # full-sample in-sample comparison of the eight baseline models
        return {
            "config_version": 1,
            "data": {"source": "synthetic", "n": 7062},
            "seeds": {"data": 1, "mask": 2, "model": 3, "split": 4},
            "experiment": {
                "patterns": ["mcar:0.0"],
                "models": list(M.ALL_CODES),
                "lines": [0.5],
                "cutpoints": [0.5],
                "predict_on": "all",
                "cdf": "first",
            },
            # desk-scale MLP budget; library defaults are heavier
            "hyper": {"mlp": {"epochs": 30, "max_restarts": 2}},
        }
    if name == "table6":
        # 8 patterns x 8 models x 4 lines sweep, out-of-sample predictions
        return {
            "config_version": 1,
            "data": {"source": "synthetic", "n": 7062},
            "seeds": {"data": 1, "mask": 2, "model": 3, "split": 4},
            "experiment": {
                "patterns": ["mcar:0.05", "mcar:0.25", "mcar:0.5",
                             "mcar:0.75", "mcar:0.95", "mar_pure",
                             "mar_mnar", "mnar_pure"],
                "models": list(M.ALL_CODES),
                "lines": [0.05, 0.25, 0.5, 0.75],
                "cutpoints": [0.5],
                "predict_on": "missing",
                "cdf": "none",
            },
            # desk-scale budgets so the full sweep stays in the minutes range
            "hyper": {
                "mlp": {"epochs": 20, "max_restarts": 1},
                "en": {"lambda_grid_size": 50, "cv_folds": 5},
                "rf": {"trees": 100},
            },
        }
    if name == "grid-desk":
        return {
            "config_version": 1,
            "data": {"source": "synthetic", "n": 7062},
            "seeds": {"data": 1, "mask": 2, "model": 3, "split": 4},
            "grid": {"families": ["rf", "en", "mlp"], "target": "continuous",
                     "line": 0.5, "preset": "desk"},
        }
    raise ConfigError(f"unknown preset {name!r} "
                      "(available: baseline, table6, grid-desk)")
