"""Pointwise activations with hand-coded derivatives."""

from __future__ import annotations

import numpy as np


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_deriv(x):
    # subgradient at 0 fixed to 0
    return np.where(x > 0.0, 1.0, 0.0)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


def _sigmoid_deriv(x):
    s = _sigmoid(x)
    return s * (1.0 - s)


def _tanh_deriv(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _identity(x):
    return x


def _one(x):
    return np.ones_like(x)


_TABLE = {
    "relu": (_relu, _relu_deriv),
    "tanh": (np.tanh, _tanh_deriv),
    "sigmoid": (_sigmoid, _sigmoid_deriv),
    "identity": (_identity, _one),
}


class Activation:
    """An activation tag that can be applied and differentiated."""

    __slots__ = ("name", "_fn", "_deriv")

    def __init__(self, name: str):
        if name not in _TABLE:
            raise ValueError(
                f"unknown activation {name!r}; choose from {sorted(_TABLE)}"
            )
        self.name = name
        self._fn, self._deriv = _TABLE[name]

    def __call__(self, x):
        return self._fn(x)

    def deriv(self, x):
        return self._deriv(x)

    def __eq__(self, other):
        return isinstance(other, Activation) and other.name == self.name

    def __hash__(self):
        return hash(("Activation", self.name))

    def __repr__(self):
        return f"Activation({self.name!r})"
