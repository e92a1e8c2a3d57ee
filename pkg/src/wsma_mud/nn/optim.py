"""Adaptive-moment (Adam) optimizer over flat parameter buffers."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizerState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)
    _work: np.ndarray = field(default=None, repr=False)


def optimizer_step(params, grads, state):
    """One bias-corrected Adam update, applied in place to ``params``."""
    g = grads.flat
    if state.m is None:
        state.m = np.zeros_like(g)
        state.v = np.zeros_like(g)
    if state.m.shape != g.shape:
        raise ValueError("optimizer moments do not match the parameter layout")
    if state._work is None or state._work.shape != g.shape:
        state._work = np.empty_like(g)
    m, v, tmp = state.m, state.v, state._work
    b1, b2 = state.beta1, state.beta2
    state.step += 1
    # in-place updates only: this runs once per batch on every parameter
    m *= b1
    np.multiply(g, 1 - b1, out=tmp)
    m += tmp
    np.multiply(g, g, out=tmp)
    tmp *= 1 - b2
    v *= b2
    v += tmp
    np.sqrt(v, out=tmp)
    tmp *= 1 / np.sqrt(1 - b2**state.step)
    tmp += state.eps
    np.divide(m, tmp, out=tmp)
    tmp *= state.learning_rate / (1 - b1**state.step)
    params.flat -= tmp
    params.version += 1
    return params, state
