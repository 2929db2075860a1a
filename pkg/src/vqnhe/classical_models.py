"""Classical post-processing modules f: bitstring -> amplitude factor.

Three variants:

* ``identity``      -- f(s) = 1, no parameters.
* ``bounded_mlp``   -- real fully connected net on spin inputs (1 - 2 s_i),
  one tanh hidden layer of width 2n, output exp(tanh(.)) so the range is
  pinned to [1/e, e] for every weight setting.
* ``complex_table`` -- one free complex amplitude per basis string, no range
  restriction.

``evaluate_all`` returns f on all 2^n strings at once (basis order: qubit 0 =
most significant bit), which is what the exact estimator and the gradient
passes consume.  ``backprop_all`` turns a vector dE/df(s) into dE/dparams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VARIANTS = ("identity", "bounded_mlp", "complex_table")


def _spin_inputs(n: int) -> np.ndarray:
    """(2^n, n) matrix of (1 - 2 s_i) rows for every basis string."""
    idx = np.arange(2 ** n)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
    return 1.0 - 2.0 * bits


_SPIN_CACHE: dict[int, np.ndarray] = {}


def spin_inputs(n: int) -> np.ndarray:
    if n not in _SPIN_CACHE:
        _SPIN_CACHE[n] = _spin_inputs(n)
    return _SPIN_CACHE[n]


def mlp_param_count(n: int) -> int:
    hidden = 2 * n
    return hidden * n + hidden + hidden + 1


@dataclass
class PostProcessor:
    variant: str
    n: int
    params: np.ndarray

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        self.params = np.asarray(self.params, dtype=float)
        if self.params.shape != (self.param_count,):
            raise ValueError(
                f"{self.variant} on {self.n} qubits needs {self.param_count} parameters,"
                f" got {self.params.shape}"
            )

    @property
    def param_count(self) -> int:
        if self.variant == "identity":
            return 0
        if self.variant == "bounded_mlp":
            return mlp_param_count(self.n)
        return 2 * 2 ** self.n  # complex_table: real and imaginary parts

    @property
    def is_complex(self) -> bool:
        return self.variant == "complex_table"

    @classmethod
    def identity(cls, n: int) -> "PostProcessor":
        return cls("identity", n, np.zeros(0))

    @classmethod
    def bounded_mlp(cls, n: int, params=None) -> "PostProcessor":
        params = np.zeros(mlp_param_count(n)) if params is None else params
        return cls("bounded_mlp", n, params)

    @classmethod
    def complex_table(cls, n: int, values=None) -> "PostProcessor":
        if values is None:
            params = np.concatenate([np.ones(2 ** n), np.zeros(2 ** n)])
        else:
            values = np.asarray(values, dtype=complex).reshape(2 ** n)
            params = np.concatenate([values.real, values.imag])
        return cls("complex_table", n, params)

    def with_params(self, params) -> "PostProcessor":
        return PostProcessor(self.variant, self.n, np.asarray(params, dtype=float))

    def _mlp_weights(self):
        n, hidden = self.n, 2 * self.n
        p = self.params
        w1 = p[: hidden * n].reshape(hidden, n)
        b1 = p[hidden * n: hidden * n + hidden]
        w2 = p[hidden * n + hidden: hidden * n + 2 * hidden]
        b2 = p[-1]
        return w1, b1, w2, b2

    def evaluate_all(self) -> np.ndarray:
        """f on every basis string; real vector except for complex_table."""
        dim = 2 ** self.n
        if self.variant == "identity":
            return np.ones(dim)
        if self.variant == "bounded_mlp":
            w1, b1, w2, b2 = self._mlp_weights()
            hid = np.tanh(spin_inputs(self.n) @ w1.T + b1)
            return np.exp(np.tanh(hid @ w2 + b2))
        half = dim
        return self.params[:half] + 1j * self.params[half:]

    def evaluate(self, s: str):
        """f on a single bitstring ('0'/'1' characters, qubit 0 first)."""
        if len(s) != self.n:
            raise ValueError(f"expected {self.n} bits, got {len(s)}")
        return self.evaluate_all()[int(s, 2)]

    def backprop_all(self, upstream: np.ndarray) -> np.ndarray:
        """dE/dparams given the Wirtinger half-derivatives g(s) = dE/df(s).

        The objective is real, so dE/dconj(f) = conj(g) and the chain rule
        folds to 2 Re(g df/dx); that fold happens here, callers pass g as-is.
        """
        if self.variant == "identity":
            return np.zeros(0)
        g = np.asarray(upstream, dtype=complex)
        if self.variant == "bounded_mlp":
            up = 2.0 * np.real(g)
            w1, b1, w2, b2 = self._mlp_weights()
            x = spin_inputs(self.n)
            pre1 = x @ w1.T + b1
            hid = np.tanh(pre1)
            pre2 = hid @ w2 + b2
            f = np.exp(np.tanh(pre2))
            dpre2 = up * f * (1.0 - np.tanh(pre2) ** 2)
            gw2 = hid.T @ dpre2
            gb2 = dpre2.sum()
            dhid = np.outer(dpre2, w2) * (1.0 - hid ** 2)
            gw1 = dhid.T @ x
            gb1 = dhid.sum(axis=0)
            return np.concatenate([gw1.reshape(-1), gb1, gw2, [gb2]])
        # complex_table, params (re, im): dE/dre = 2 Re(g), dE/dim = -2 Im(g)
        return np.concatenate([2.0 * np.real(g), -2.0 * np.imag(g)])

    def save(self, path, extra: dict | None = None):
        """Round-trips bit-exactly (binary float64 container)."""
        arrays = {"variant": np.array(self.variant), "n": np.array(self.n),
                  "params": self.params}
        for k, v in (extra or {}).items():
            arrays[k] = np.asarray(v)
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path) -> tuple["PostProcessor", dict]:
        data = np.load(path, allow_pickle=False)
        f = cls(str(data["variant"]), int(data["n"]), data["params"])
        extra = {k: data[k] for k in data.files if k not in ("variant", "n", "params")}
        return f, extra


def one_qubit_r(f: PostProcessor) -> float:
    """The single post-processing freedom (f(1)-f(0))/(f(1)+f(0)) at n = 1."""
    if f.n != 1:
        raise ValueError("defined for one qubit only")
    vals = f.evaluate_all()
    if np.max(np.abs(np.imag(vals))) > 1e-12:
        raise ValueError("defined for real-valued post-processors")
    f0, f1 = np.real(vals)
    if abs(f0 + f1) < 1e-14:
        raise ZeroDivisionError("f(0) + f(1) vanishes")
    return (f1 - f0) / (f1 + f0)
