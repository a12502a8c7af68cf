"""Builtin smooth kernel factors for the CLI and the test problems."""

from __future__ import annotations

import re

import numpy as np

from .errors import UnknownKernel

_TERM_RE = re.compile(r"^([xy])(\d+)(?:\^(\d+))?$")


def _coord_poly(spec: str):
    """Monomial in the coordinates, e.g. "x1*y2" or "x1^3*y1".

    Indices are 1-based; x refers to the first argument, y to the second.
    """
    x_pow: dict[int, int] = {}
    y_pow: dict[int, int] = {}
    for term in spec.split("*"):
        m = _TERM_RE.match(term.strip())
        if not m:
            raise UnknownKernel("cannot parse coord-poly term %r" % term)
        axis, idx, expo = m.group(1), int(m.group(2)) - 1, int(m.group(3) or 1)
        target = x_pow if axis == "x" else y_pow
        target[idx] = target.get(idx, 0) + expo

    def g(x, y):
        out = np.ones(len(x))
        for idx, e in x_pow.items():
            out = out * x[:, idx] ** e
        for idx, e in y_pow.items():
            out = out * y[:, idx] ** e
        return out

    g.__name__ = "coord_poly_%s" % spec
    return g


def builtin_kernels(name: str):
    """Named smooth parts: "one", "exp-sum" and "coord-poly:<monomial>"."""
    if name == "one":
        return lambda x, y: np.ones(len(x))
    if name == "exp-sum":
        return lambda x, y: np.exp(x.sum(axis=1) + y.sum(axis=1))
    if name.startswith("coord-poly:"):
        return _coord_poly(name.split(":", 1)[1])
    raise UnknownKernel("unknown kernel %r (expected one, exp-sum or coord-poly:<spec>)"
                        % name)
