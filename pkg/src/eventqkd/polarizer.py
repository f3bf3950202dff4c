"""Event-level polarizer models.

A polarizer with orientation ``phi`` sends an incoming photon with polarization
``psi`` to output channel 0 (leaving polarized along ``phi``) or channel 1
(leaving along ``phi + pi/2``).

* PP, the probabilistic polarizer, picks channel 0 when a uniform draw
  ``r <= cos^2(psi - phi)``.
* DP, the deterministic polarizer, picks channel 0 when
  ``cos 2(psi - phi) >= 0``.  It draws nothing.

Angles are radians.  The scalar functions act on one photon; the ``*_channels``
functions act on arrays and are what the protocol runners use.
"""
from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from .rng import RngStream

HALF_PI = 0.5 * np.pi

# cos 2(psi - phi) below this magnitude counts as an exact tie (-> channel 0).
# Angles such as 45 deg never hit 0.0 exactly after a degree->radian round trip.
TIE_EPS = 1e-12


class PolarizerModel(str, enum.Enum):
    PP = "pp"
    DP = "dp"

    @classmethod
    def parse(cls, value: "PolarizerModel | str") -> PolarizerModel:
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())

    @property
    def draws_per_measurement(self) -> int:
        return 1 if self is PolarizerModel.PP else 0


class MeasurementOutcome(NamedTuple):
    channel: int
    output_polarization: float


def malus_intensities(psi: float, phi: float) -> tuple[float, float]:
    c = np.cos(psi - phi)
    i0 = float(c * c)
    return i0, 1.0 - i0


def _outcome(channel: int, phi: float) -> MeasurementOutcome:
    return MeasurementOutcome(channel, phi if channel == 0 else phi + HALF_PI)


def pp_measure(s: RngStream, psi: float, phi: float) -> MeasurementOutcome:
    r = s.uniform()
    i0, _ = malus_intensities(psi, phi)
    return _outcome(0 if r <= i0 else 1, phi)


def dp_measure(psi: float, phi: float) -> MeasurementOutcome:
    c2 = np.cos(2.0 * (psi - phi))
    return _outcome(0 if c2 >= -TIE_EPS else 1, phi)


def measure(model: PolarizerModel, s: RngStream, psi: float, phi: float) -> MeasurementOutcome:
    if PolarizerModel.parse(model) is PolarizerModel.PP:
        return pp_measure(s, psi, phi)
    return dp_measure(psi, phi)


def pp_channels(r: np.ndarray, psi, phi) -> np.ndarray:
    """Vectorised PP: channel per event given one uniform ``r`` per event."""
    c = np.cos(np.asarray(psi) - np.asarray(phi))
    return np.where(r <= c * c, 0, 1).astype(np.int8)


def dp_channels(psi, phi) -> np.ndarray:
    c2 = np.cos(2.0 * (np.asarray(psi) - np.asarray(phi)))
    return np.where(c2 >= -TIE_EPS, 0, 1).astype(np.int8)


def channels(model: PolarizerModel, s: RngStream, psi, phi) -> np.ndarray:
    """Measure ``len(psi)`` photons; PP consumes one uniform per photon."""
    psi = np.asarray(psi, dtype=np.float64)
    if PolarizerModel.parse(model) is PolarizerModel.PP:
        return pp_channels(s.uniforms(psi.size), psi, phi)
    return dp_channels(psi, phi)


def output_polarization(ch: np.ndarray, phi) -> np.ndarray:
    return np.asarray(phi) + HALF_PI * ch
