"""Small numeric helpers shared by the verdict and census code."""

from __future__ import annotations

import math

import numpy as np


def kl_bernoulli(a, d):
    """KL(a || d) for Bernoulli laws, vectorized, with 0 log 0 = 0."""
    a = np.clip(np.asarray(a, dtype=float), 0.0, 1.0)
    d = float(d)
    if d <= 0.0 or d >= 1.0:
        return np.where(a == d, 0.0, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(a > 0, a * np.log(a / d), 0.0)
        t2 = np.where(a < 1, (1 - a) * np.log((1 - a) / (1 - d)), 0.0)
    return t1 + t2


def chernoff_tail(count, cells, d):
    """Two-sided Chernoff bound ``2 exp(-N KL(k/N || d))`` on a block count.

    Under a null where each of the N cells is present independently with
    probability d (or the cells are a uniform sample of a population of
    density d, which is only more concentrated), this bounds the chance of
    a deviation at least as large as the observed one.
    """
    cells = np.asarray(cells, dtype=float)
    a = np.divide(np.asarray(count, dtype=float), cells, out=np.zeros_like(cells), where=cells > 0)
    return np.minimum(2.0 * np.exp(-cells * kl_bernoulli(a, d)), 1.0)


def binomial_sigma(prob: float, trials: int) -> float:
    prob = min(max(prob, 0.0), 1.0)
    return math.sqrt(prob * (1 - prob) / trials) if trials > 0 else 0.0
