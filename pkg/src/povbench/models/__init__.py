"""Model specs, fitting dispatch, prediction, and artifact serialization.

Five estimator families, each usable with a continuous target (log income)
or a categorical one (poor / non-poor), give the eight model codes:

    wcn  OLS, continuous            pct  logit, categorical
    rcn  random forest, continuous  rct  random forest, categorical
    ecn  elastic net, continuous    ect  elastic net, categorical
    ncn  two-layer MLP, continuous  nct  two-layer MLP, categorical
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..dataset import DEFAULT_REGRESSORS
from ..errors import DataValidationError, SchemaError
from . import elastic_net, forest, linear, mlp

OLS = "OLS"
LOGIT = "LOGIT"
RANDOM_FOREST = "RANDOM_FOREST"
ELASTIC_NET = "ELASTIC_NET"
MLP2 = "MLP2"

CONTINUOUS = "CONTINUOUS"
CATEGORICAL = "CATEGORICAL"

MODEL_CODES = {
    (OLS, CONTINUOUS): "wcn",
    (RANDOM_FOREST, CONTINUOUS): "rcn",
    (ELASTIC_NET, CONTINUOUS): "ecn",
    (MLP2, CONTINUOUS): "ncn",
    (LOGIT, CATEGORICAL): "pct",
    (RANDOM_FOREST, CATEGORICAL): "rct",
    (ELASTIC_NET, CATEGORICAL): "ect",
    (MLP2, CATEGORICAL): "nct",
}
CODE_TO_SPEC = {v: k for k, v in MODEL_CODES.items()}
ALL_CODES = tuple(MODEL_CODES.values())


@dataclass(frozen=True)
class RFParams:
    trees: int = 100
    mtry: int = 3          # floor(sqrt(12)) for the default regressor set
    max_depth: int = 0     # 0 = unlimited
    min_leaf: int = 1


@dataclass(frozen=True)
class ENParams:
    alpha: float = 0.0
    lambda_grid_size: int = 100
    cv_folds: int = 10


@dataclass(frozen=True)
class MLPParams:
    layer1: int = 100
    layer2: int = 100
    learning_rate: float = 0.1
    batch_size: int = 50
    epochs: int = 100
    max_restarts: int = 10
    bias: bool = True      # per-layer biases; switchable
    seed: int | None = None  # overrides the fit-time seed when set


@dataclass(frozen=True)
class LogitParams:
    max_iter: int = 100
    tol: float = 1e-8


@dataclass(frozen=True)
class HyperParams:
    rf: RFParams = field(default_factory=RFParams)
    en: ENParams = field(default_factory=ENParams)
    mlp: MLPParams = field(default_factory=MLPParams)
    logit: LogitParams = field(default_factory=LogitParams)


@dataclass(frozen=True)
class ModelSpec:
    family: str
    target: str
    hyper: HyperParams = field(default_factory=HyperParams)
    regressor_order: tuple = DEFAULT_REGRESSORS

    def __post_init__(self):
        if (self.family, self.target) not in MODEL_CODES:
            raise DataValidationError(
                f"unsupported family/target pair: {self.family}/{self.target}"
                " (OLS is continuous-only, LOGIT categorical-only)")
        object.__setattr__(self, "regressor_order", tuple(self.regressor_order))

    @property
    def code(self) -> str:
        return MODEL_CODES[(self.family, self.target)]

    @classmethod
    def from_code(cls, code, hyper=None, regressor_order=DEFAULT_REGRESSORS):
        if code not in CODE_TO_SPEC:
            raise DataValidationError(f"unknown model code {code!r}")
        family, target = CODE_TO_SPEC[code]
        return cls(family, target, hyper or HyperParams(), regressor_order)


@dataclass
class FittedModel:
    spec: ModelSpec
    params: dict
    train_residuals: np.ndarray | None
    diagnostics: dict

    @property
    def is_categorical(self) -> bool:
        return self.spec.target == CATEGORICAL


def _validate_fit_inputs(spec, X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DataValidationError("X rows must match len(y)")
    if X.shape[1] != len(spec.regressor_order):
        raise SchemaError(
            f"X has {X.shape[1]} columns; spec expects "
            f"{len(spec.regressor_order)}")
    if X.shape[0] < X.shape[1] + 1:
        raise DataValidationError(
            f"need at least {X.shape[1] + 1} rows (one more than parameters), "
            f"got {X.shape[0]}")
    if spec.target == CATEGORICAL:
        if not np.all((y == 0) | (y == 1)):
            raise DataValidationError("categorical target must be 0/1")
    return X, y


def fit(spec: ModelSpec, X, y, seed: int = 0) -> FittedModel:
    """Fit one model family on (X, y); X columns follow spec.regressor_order."""
    X, y = _validate_fit_inputs(spec, X, y)
    categorical = spec.target == CATEGORICAL
    names = list(spec.regressor_order) + ["intercept"]

    if spec.family == OLS:
        res = linear.fit_ols(X, y, column_names=names)
        params = {"coef": res["coef"], "se": res["se"]}
        diagnostics = {"r2": res["r2"], "iterations": 1, "converged": True}
        resid = res["residuals"]
    elif spec.family == LOGIT:
        hp = spec.hyper.logit
        res = linear.fit_logit(X, y, max_iter=hp.max_iter, tol=hp.tol,
                               column_names=names)
        params = {"coef": res["coef"]}
        diagnostics = {"pseudo_r2": res["pseudo_r2"],
                       "iterations": res["iterations"],
                       "converged": res["converged"]}
        resid = None
    elif spec.family == ELASTIC_NET:
        hp = spec.hyper.en
        res = elastic_net.fit_elastic_net(
            X, y, categorical, hp.alpha, hp.lambda_grid_size, hp.cv_folds,
            seed)
        params = {"coef": res["coef"], "lambda": res["lambda"],
                  "alpha": res["alpha"], "lambda_grid": res["lambda_grid"],
                  "cv_deviance": res["cv_deviance"]}
        diagnostics = {"iterations": hp.lambda_grid_size, "converged": True}
        resid = None if categorical else y - linear.predict_linear(res["coef"], X)
        if not categorical:
            tss = np.sum((y - y.mean()) ** 2)
            diagnostics["r2"] = 1.0 - float(resid @ resid) / tss if tss else 1.0
    elif spec.family == RANDOM_FOREST:
        hp = spec.hyper.rf
        trees = forest.fit_forest(X, y, hp.trees, hp.mtry, hp.max_depth,
                                  hp.min_leaf, categorical, seed)
        params = {"forest": trees, "trees": hp.trees, "mtry": hp.mtry,
                  "max_depth": hp.max_depth, "min_leaf": hp.min_leaf}
        diagnostics = {"iterations": hp.trees, "converged": True}
        resid = None if categorical else y - forest.predict_forest(trees, X)
        if not categorical:
            tss = np.sum((y - y.mean()) ** 2)
            diagnostics["r2"] = 1.0 - float(resid @ resid) / tss if tss else 1.0
    elif spec.family == MLP2:
        hp = spec.hyper.mlp
        use_seed = hp.seed if hp.seed is not None else seed
        res = mlp.fit_mlp(X, y, categorical, hp.layer1, hp.layer2,
                          hp.learning_rate, hp.batch_size, hp.epochs,
                          hp.max_restarts, use_seed, bias=hp.bias)
        params = res
        diagnostics = {"train_loss": res["train_loss"],
                       "iterations": hp.epochs, "converged": True}
        resid = None if categorical else y - mlp.predict_mlp(res, X, False)
    else:
        raise DataValidationError(f"unknown family {spec.family!r}")

    return FittedModel(spec=spec, params=params, train_residuals=resid,
                       diagnostics=diagnostics)


def predict(m: FittedModel, X) -> np.ndarray:
    """Point predictions: log income (continuous) or P(poor) (categorical)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(m.spec.regressor_order):
        raise SchemaError(
            f"prediction matrix has {X.shape[1] if X.ndim == 2 else 'bad'} "
            f"columns; spec expects {len(m.spec.regressor_order)}")
    fam = m.spec.family
    if fam == OLS:
        return linear.predict_linear(m.params["coef"], X)
    if fam == LOGIT:
        return linear.predict_logit(m.params["coef"], X)
    if fam == ELASTIC_NET:
        if m.is_categorical:
            return linear.predict_logit(m.params["coef"], X)
        return linear.predict_linear(m.params["coef"], X)
    if fam == RANDOM_FOREST:
        return forest.predict_forest(m.params["forest"], X)
    if fam == MLP2:
        return mlp.predict_mlp(m.params, X, m.is_categorical)
    raise DataValidationError(f"unknown family {fam!r}")


def predicted_distribution_stats(preds) -> dict:
    """Mean, sd and the 5/25/50/75/95 percentiles of a prediction vector."""
    preds = np.asarray(preds, dtype=np.float64)
    if preds.size == 0:
        raise DataValidationError("empty prediction vector")
    qs = np.percentile(preds, [5, 25, 50, 75, 95])
    sd = 0.0 if preds.min() == preds.max() else float(preds.std())
    return {
        "mean": float(preds.mean()),
        "sd": sd,
        "quantiles": {5: qs[0], 25: qs[1], 50: qs[2], 75: qs[3], 95: qs[4]},
    }


# -- artifact serialization ------------------------------------------------------

_FORMAT_VERSION = 1


def _to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return {"__nd__": obj.dtype.str, "data": obj.tolist()}
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items() if not k.startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _from_jsonable(obj):
    if isinstance(obj, dict):
        if "__nd__" in obj:
            return np.array(obj["data"], dtype=np.dtype(obj["__nd__"]))
        return {k: _from_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_from_jsonable(v) for v in obj]
    return obj


def save_model(m: FittedModel, path):
    doc = {
        "format_version": _FORMAT_VERSION,
        "family": m.spec.family,
        "target": m.spec.target,
        "regressor_order": list(m.spec.regressor_order),
        "hyper": asdict(m.spec.hyper),
        "params": _to_jsonable(m.params),
        "train_residuals": _to_jsonable(m.train_residuals),
        "diagnostics": _to_jsonable(m.diagnostics),
    }
    if m.spec.family == MLP2:
        doc["params"]["bias_flag"] = bool(m.params["params"]["_bias"])
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> FittedModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != _FORMAT_VERSION:
        raise SchemaError(f"unsupported model artifact version "
                          f"{doc.get('format_version')}")
    hyper = HyperParams(
        rf=RFParams(**doc["hyper"]["rf"]),
        en=ENParams(**doc["hyper"]["en"]),
        mlp=MLPParams(**doc["hyper"]["mlp"]),
        logit=LogitParams(**doc["hyper"]["logit"]),
    )
    spec = ModelSpec(doc["family"], doc["target"], hyper,
                     tuple(doc["regressor_order"]))
    params = _from_jsonable(doc["params"])
    if doc["family"] == MLP2:
        params["params"]["_bias"] = params.pop("bias_flag", True)
    resid = _from_jsonable(doc["train_residuals"])
    return FittedModel(spec=spec, params=params, train_residuals=resid,
                       diagnostics=_from_jsonable(doc["diagnostics"]))


def with_rf(hyper: HyperParams, **kw) -> HyperParams:
    return replace(hyper, rf=replace(hyper.rf, **kw))


def with_en(hyper: HyperParams, **kw) -> HyperParams:
    return replace(hyper, en=replace(hyper.en, **kw))


def with_mlp(hyper: HyperParams, **kw) -> HyperParams:
    return replace(hyper, mlp=replace(hyper.mlp, **kw))
