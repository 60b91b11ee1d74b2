"""Multi-label MLP: one shared tanh hidden layer, per-type logistic heads.

The loss is the sum over types of binary cross-entropy, averaged over the
examples in a batch. Training is minibatch SGD with AdaGrad and early
stopping on a held-out dev set. Parameters are float64 so analytic
gradients can be validated against central finite differences.
"""

from __future__ import annotations

import json

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator

CHECKPOINT_VERSION = 1
_PROB_EPS = 1e-12  # keep reported probabilities inside the open interval (0, 1)

PARAM_NAMES = ("w_in", "b_in", "w_out", "b_out")


def adagrad_step(params, grads, accumulators, learning_rate, epsilon):
    """In-place AdaGrad update over parallel lists of arrays.

    accumulator += grad^2; param -= lr * grad / (sqrt(accumulator) + eps).
    """
    for p, g, a in zip(params, grads, accumulators):
        a += g * g
        p -= learning_rate * g / (np.sqrt(a) + epsilon)


class MultiLabelMLP(BaseEstimator):
    """Shared-hidden-layer multi-label classifier.

    Parameters
    ----------
    hidden_size : units in the shared tanh layer.
    learning_rate, adagrad_epsilon, batch_size, max_epochs, patience, seed :
        optimization settings. ``patience`` is the number of consecutive
        epochs without dev improvement tolerated before stopping; 0 stops at
        the first non-improving epoch. The parameters from the best dev
        epoch are restored at the end.
    early_stop_metric : "loss" (dev loss, default) or "micro_f1"
        (dev micro-F1 at threshold 0.5).

    Fitted attributes: ``w_in_`` (h, n), ``b_in_`` (h,), ``w_out_`` (T, h),
    ``b_out_`` (T,).
    """

    def __init__(self, hidden_size=100, learning_rate=0.1, adagrad_epsilon=1e-8,
                 batch_size=128, max_epochs=100, patience=3, seed=0,
                 early_stop_metric="loss"):
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.adagrad_epsilon = adagrad_epsilon
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed
        self.early_stop_metric = early_stop_metric

    # -- parameter plumbing -------------------------------------------------

    def init_params(self, n_inputs, num_types, rng=None):
        """Seeded uniform(-r, r) init with r = sqrt(6 / (fan_in + fan_out))."""
        if rng is None:
            rng = np.random.default_rng(self.seed)
        h = self.hidden_size
        r_in = np.sqrt(6.0 / (n_inputs + h))
        r_out = np.sqrt(6.0 / (h + num_types))
        self.w_in_ = rng.uniform(-r_in, r_in, size=(h, n_inputs))
        self.b_in_ = np.zeros(h)
        self.w_out_ = rng.uniform(-r_out, r_out, size=(num_types, h))
        self.b_out_ = np.zeros(num_types)
        return self

    @classmethod
    def from_weights(cls, w_in, b_in, w_out, b_out, **kwargs):
        mlp = cls(hidden_size=w_in.shape[0], **kwargs)
        mlp.w_in_ = np.asarray(w_in, dtype=np.float64)
        mlp.b_in_ = np.asarray(b_in, dtype=np.float64)
        mlp.w_out_ = np.asarray(w_out, dtype=np.float64)
        mlp.b_out_ = np.asarray(b_out, dtype=np.float64)
        return mlp

    def parameters(self):
        return [self.w_in_, self.b_in_, self.w_out_, self.b_out_]

    @property
    def n_inputs_(self):
        return self.w_in_.shape[1]

    @property
    def num_types_(self):
        return self.w_out_.shape[0]

    # -- forward / gradients ------------------------------------------------

    def _logits(self, X):
        X = np.atleast_2d(np.asarray(X))
        if X.shape[1] != self.n_inputs_:
            raise ValueError(f"expected {self.n_inputs_} features, got {X.shape[1]}")
        hidden = np.tanh(X @ self.w_in_.T + self.b_in_)
        return hidden @ self.w_out_.T + self.b_out_, hidden

    def forward(self, X):
        """Per-type probabilities, shape (m, num_types)."""
        logits, _ = self._logits(X)
        return np.clip(expit(logits), _PROB_EPS, 1.0 - _PROB_EPS)

    predict_proba = forward

    def loss(self, X, Y):
        logits, _ = self._logits(X)
        Y = self._check_labels(Y, logits.shape)
        return float(np.mean(np.sum(np.logaddexp(0.0, logits) - Y * logits, axis=1)))

    def loss_and_gradient(self, X, Y):
        """Mean summed-BCE loss and its exact gradient for a batch.

        Returns (loss, [dw_in, db_in, dw_out, db_out]).
        """
        X = np.atleast_2d(np.asarray(X))
        logits, hidden = self._logits(X)
        Y = self._check_labels(Y, logits.shape)
        m = X.shape[0]
        loss = float(np.mean(np.sum(np.logaddexp(0.0, logits) - Y * logits, axis=1)))
        dz = (expit(logits) - Y) / m  # (m, T)
        dw_out = dz.T @ hidden
        db_out = dz.sum(axis=0)
        dh = (dz @ self.w_out_) * (1.0 - hidden**2)  # (m, h)
        dw_in = dh.T @ X
        db_in = dh.sum(axis=0)
        return loss, [dw_in, db_in, dw_out, db_out]

    @staticmethod
    def _check_labels(Y, shape):
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if Y.shape != shape:
            raise ValueError(f"label matrix shape {Y.shape} does not match {shape}")
        return Y

    # -- training -----------------------------------------------------------

    def fit(self, X, Y, X_dev, Y_dev):
        """Minibatch AdaGrad with early stopping on the dev split."""
        X = np.atleast_2d(np.asarray(X))
        Y = np.atleast_2d(np.asarray(Y))
        if len(X) == 0 or len(X_dev) == 0:
            raise ValueError("training and dev sets must be non-empty")
        rng = np.random.default_rng(self.seed)
        self.init_params(X.shape[1], Y.shape[1], rng=rng)
        params = self.parameters()
        accumulators = [np.zeros_like(p) for p in params]

        best_metric = np.inf
        best_params = [p.copy() for p in params]
        bad_epochs = 0
        self.history_ = []
        for epoch in range(self.max_epochs):
            order = rng.permutation(len(X))
            for s in range(0, len(order), self.batch_size):
                idx = order[s : s + self.batch_size]
                _, grads = self.loss_and_gradient(X[idx], Y[idx])
                adagrad_step(params, grads, accumulators,
                             self.learning_rate, self.adagrad_epsilon)
            metric = self._dev_metric(X_dev, Y_dev)
            self.history_.append(metric)
            if metric < best_metric:
                best_metric = metric
                best_params = [p.copy() for p in params]
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs > self.patience:
                    break
        self.w_in_, self.b_in_, self.w_out_, self.b_out_ = best_params
        self.best_dev_metric_ = float(best_metric)
        return self

    def _dev_metric(self, X_dev, Y_dev):
        """Lower is better."""
        if self.early_stop_metric == "loss":
            return self.loss(X_dev, Y_dev)
        if self.early_stop_metric == "micro_f1":
            pred = self.forward(X_dev) >= 0.5
            gold = np.asarray(Y_dev).astype(bool)
            tp = int(np.sum(pred & gold))
            denom = 2 * tp + int(np.sum(pred & ~gold)) + int(np.sum(~pred & gold))
            return -(2.0 * tp / denom) if denom else 0.0
        raise ValueError(f"unknown early_stop_metric {self.early_stop_metric!r}")

    # -- persistence ----------------------------------------------------------

    def save(self, path):
        """JSON checkpoint; float repr round-trips parameters exactly."""
        payload = {
            "version": CHECKPOINT_VERSION,
            "n": self.n_inputs_,
            "h": self.hidden_size,
            "num_types": self.num_types_,
            "params": self.get_params(),
            "weights": {name: p.ravel().tolist()
                        for name, p in zip(PARAM_NAMES, self.parameters())},
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
        if payload.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version")
        n, h, t = payload["n"], payload["h"], payload["num_types"]
        w = payload["weights"]
        mlp = cls(**payload["params"])
        mlp.w_in_ = np.array(w["w_in"], dtype=np.float64).reshape(h, n)
        mlp.b_in_ = np.array(w["b_in"], dtype=np.float64)
        mlp.w_out_ = np.array(w["w_out"], dtype=np.float64).reshape(t, h)
        mlp.b_out_ = np.array(w["b_out"], dtype=np.float64)
        if mlp.b_in_.shape != (h,) or mlp.b_out_.shape != (t,):
            raise ValueError(f"{path}: weight shapes do not match header")
        return mlp
