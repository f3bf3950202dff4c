"""Time delays, tag quantisation and the coincidence window.

A photon whose polarization makes angle ``theta`` with the polarizer is
delayed by a uniform random time in ``[0, T]`` with ``T = |sin 2 theta|**d``;
the maximum delay is the unit of time.  Tags are integers counting periods of
the clock resolution ``tau`` and two tags are coincident when they differ by
fewer than ``k`` ticks, so the window is ``W = k * tau``.

``weight_closed_form`` is the probability that two unquantised delays drawn
from ``[0, T1]`` and ``[0, T2]`` land within ``W`` of each other;
``weight_monte_carlo`` estimates the same number by sampling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RngStream

# Grid on which the sampled weight is checked against the closed form.
WEIGHT_GRID_T = tuple(round(0.1 * i, 10) for i in range(1, 11))
WEIGHT_GRID_W = tuple(round(0.05 * i, 10) for i in range(1, 21))


@dataclass(frozen=True)
class DelayParams:
    d: float = 2.0
    tau: float = 0.00025
    k: int = 1

    def __post_init__(self):
        if not self.d >= 0:
            raise ValueError(f"d must be >= 0, got {self.d}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")

    @property
    def window(self) -> float:
        return self.k * self.tau


def max_delay(theta, d: float):
    """|sin 2 theta|**d; identically 1 for d == 0."""
    if d < 0:
        raise ValueError("d must be >= 0")
    if d == 0:
        return np.ones_like(np.asarray(theta, dtype=np.float64))[()]
    return np.abs(np.sin(2.0 * np.asarray(theta, dtype=np.float64))) ** d


def ticks_from_uniform(u, T, tau: float) -> np.ndarray:
    return np.floor(np.asarray(u) * np.asarray(T) / tau).astype(np.int64)


def draw_time_tag(s: RngStream, T: float, tau: float) -> int:
    return int(ticks_from_uniform(s.uniform(), T, tau))


def draw_time_tags(s: RngStream, T, tau: float) -> np.ndarray:
    T = np.asarray(T, dtype=np.float64)
    return ticks_from_uniform(s.uniforms(T.size), T, tau)


def coincident(a, b, k: int):
    if k < 1:
        raise ValueError("k must be >= 1")
    return np.abs(np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64)) < k


def _sq(x):
    return x * np.abs(x)


def weight_closed_form(T1, T2, W):
    """P(|t1 - t2| < W) for t1 ~ U[0, T1], t2 ~ U[0, T2].

    With one of the delays identically zero the probability is
    ``min(1, W / max(T1, T2))``, the T -> 0 limit of the general expression;
    with both zero it is 1.
    """
    T1 = np.asarray(T1, dtype=np.float64)
    T2 = np.asarray(T2, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if np.any(W <= 0):
        raise ValueError("W must be > 0")
    if np.any(T1 < 0) or np.any(T2 < 0):
        raise ValueError("T1, T2 must be >= 0")
    T1, T2, W = np.broadcast_arrays(T1, T2, W)
    degenerate = (T1 == 0) | (T2 == 0)
    a = np.where(degenerate, 1.0, T1)
    b = np.where(degenerate, 1.0, T2)
    num = (a * a + b * b + 2.0 * (a + b) * W
           + _sq(W - a) + _sq(W - b)
           - _sq(W - a + b) - _sq(W + a - b))
    w = num / (4.0 * a * b)
    tmax = np.maximum(T1, T2)
    limit = np.where(tmax == 0, 1.0, np.minimum(1.0, W / np.where(tmax == 0, 1.0, tmax)))
    # exactly 1 once the window spans every difference; the polynomial form
    # cancels badly there
    w = np.where(W >= T1 + T2, 1.0, w)
    out = np.where(degenerate, limit, w)
    return out[()] if out.ndim == 0 else out


def weight_monte_carlo(s: RngStream, T1: float, T2: float, W: float, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    t1 = s.uniforms(n) * T1
    t2 = s.uniforms(n) * T2
    return float(np.count_nonzero(np.abs(t1 - t2) < W)) / n
