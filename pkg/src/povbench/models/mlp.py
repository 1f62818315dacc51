"""Two-hidden-layer perceptron trained by mini-batch SGD.

ReLU activations; mean-squared-error loss for continuous targets and
softmax cross-entropy (two output units) for categorical ones. Weights are
initialized scaled-uniform with variance factor 1 (U(-sqrt(3/fan_in), +...)),
biases at zero. The best of `restarts` independent runs (lowest full-sample
training loss) is kept.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateTargetError

_LAYERS = (("W1", "b1"), ("W2", "b2"), ("W3", "b3"))


def init_params(p, h1, h2, n_out, rng, bias=True):
    params = {}
    for name, fan_in, fan_out in (("1", p, h1), ("2", h1, h2), ("3", h2, n_out)):
        limit = np.sqrt(3.0 / fan_in)
        params["W" + name] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params["b" + name] = np.zeros(fan_out)
    params["_bias"] = bias
    return params


def forward(params, X):
    h1 = X @ params["W1"]
    if params["_bias"]:
        h1 = h1 + params["b1"]
    h1 = np.maximum(h1, 0.0)
    h2 = h1 @ params["W2"]
    if params["_bias"]:
        h2 = h2 + params["b2"]
    h2 = np.maximum(h2, 0.0)
    out = h2 @ params["W3"]
    if params["_bias"]:
        out = out + params["b3"]
    return out


def _softmax(logits):
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grads(params, X, y, classification):
    """Batch loss and analytic gradients for every parameter.

    Continuous: loss = mean((out - y)^2). Categorical: y in {0,1},
    loss = mean softmax cross-entropy over two output units.
    """
    n = X.shape[0]
    h1_pre = X @ params["W1"] + (params["b1"] if params["_bias"] else 0.0)
    h1 = np.maximum(h1_pre, 0.0)
    h2_pre = h1 @ params["W2"] + (params["b2"] if params["_bias"] else 0.0)
    h2 = np.maximum(h2_pre, 0.0)
    out = h2 @ params["W3"] + (params["b3"] if params["_bias"] else 0.0)

    if classification:
        probs = _softmax(out)
        yi = y.astype(np.int64)
        loss = -np.mean(np.log(np.clip(probs[np.arange(n), yi], 1e-300, None)))
        dout = probs.copy()
        dout[np.arange(n), yi] -= 1.0
        dout /= n
    else:
        resid = out[:, 0] - y
        loss = np.mean(resid ** 2)
        dout = (2.0 * resid / n)[:, None]

    grads = {}
    grads["W3"] = h2.T @ dout
    grads["b3"] = dout.sum(axis=0)
    dh2 = dout @ params["W3"].T
    dh2[h2_pre <= 0.0] = 0.0
    grads["W2"] = h1.T @ dh2
    grads["b2"] = dh2.sum(axis=0)
    dh1 = dh2 @ params["W2"].T
    dh1[h1_pre <= 0.0] = 0.0
    grads["W1"] = X.T @ dh1
    grads["b1"] = dh1.sum(axis=0)
    if not params["_bias"]:
        for _, bn in _LAYERS:
            grads[bn] = np.zeros_like(grads[bn])
    return float(loss), grads


def _train_once(X, y, classification, h1, h2, lr, batch, epochs, rng, bias):
    n, p = X.shape
    n_out = 2 if classification else 1
    params = init_params(p, h1, h2, n_out, rng, bias=bias)
    for _ in range(epochs):
        perm = rng.permutation(n)
        for s in range(0, n, batch):
            idx = perm[s:s + batch]
            _, grads = loss_and_grads(params, X[idx], y[idx], classification)
            for wn, bn in _LAYERS:
                params[wn] -= lr * grads[wn]
                if bias:
                    params[bn] -= lr * grads[bn]
    loss, _ = loss_and_grads(params, X, y, classification)
    return params, loss


def fit_mlp(X, y, classification, h1, h2, lr, batch, epochs, restarts, seed,
            bias=True):
    """Best-of-restarts SGD training on standardized inputs.

    Continuous targets are centered on the training mean; predictions add
    it back. Returns params plus the standardization constants.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if classification and (y.sum() == 0 or y.sum() == y.size):
        raise DegenerateTargetError("categorical target has a single class")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    Xs = (X - mean) / scale
    y_mean = 0.0 if classification else float(y.mean())
    yt = y if classification else y - y_mean

    best_params, best_loss = None, np.inf
    for child in np.random.SeedSequence(seed).spawn(max(restarts, 1)):
        rng = np.random.default_rng(child)
        params, loss = _train_once(Xs, yt, classification, h1, h2, lr,
                                   batch, epochs, rng, bias)
        if loss < best_loss:
            best_params, best_loss = params, loss
    return {"params": best_params, "train_loss": best_loss,
            "x_mean": mean, "x_scale": scale, "y_mean": y_mean}


def predict_mlp(fitted, X, classification):
    Xs = (np.asarray(X, dtype=np.float64) - fitted["x_mean"]) / fitted["x_scale"]
    out = forward(fitted["params"], Xs)
    if classification:
        return _softmax(out)[:, 1]
    return out[:, 0] + fitted["y_mean"]
