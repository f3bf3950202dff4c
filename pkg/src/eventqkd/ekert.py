"""Ekert key exchange with time-tag coincidence selection.

The source emits pairs polarized at ``psi`` and ``psi + pi/2`` with ``psi``
uniform.  Each station picks one of its two polarizer settings by a coin,
records ``x = +1`` for channel 0 and ``x = -1`` for channel 1, and attaches a
time tag delayed by up to ``|sin 2(psi - phi)|**d``.  Pairs whose tags differ
by fewer than ``k`` ticks are coincidences; the coincidence counts per setting
pair estimate the joint probabilities, from which the Wigner parameter ``S``
and the modified parameter ``S'`` follow.  Coincidences with both stations on
their first setting make the key, Bob's bits inverted.

Eve, when present, sits with a fixed polarizer on each arm.  Photons leaving
her channel 0 continue, polarized along her polarizer; by default a pair with
either photon in channel 1 never reaches Alice and Bob (``eve_mode="filter"``),
which delivers the product state.  ``eve_mode="resend"`` instead forwards
channel-1 photons polarized at ``psi_E + pi/2``.

Pair ``n`` occupies entry ``n`` of both detection logs; coincidences are only
sought within a pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .polarizer import HALF_PI, PolarizerModel, channels, measure
from .rng import ALICE, BOB, EVE_A, EVE_B, SOURCE, ActorStreams, RngStream
from .timetag import DelayParams, coincident, draw_time_tag, max_delay, ticks_from_uniform

TWO_PI = 2.0 * np.pi
CHUNK = 1 << 19
SETTING_PAIRS = ((1, 1), (1, 2), (2, 1), (2, 2))
EVE_MODES = ("filter", "resend")


@dataclass(frozen=True)
class EkertConfig:
    n_pairs: int = 10_000_000
    model: PolarizerModel = PolarizerModel.DP
    delay: DelayParams = field(default_factory=DelayParams)
    settings_a: tuple[float, float] = (0.0, np.radians(-30.0))
    settings_b: tuple[float, float] = (0.0, np.radians(30.0))
    eve: Optional[tuple[float, float]] = None
    eve_model: Optional[PolarizerModel] = None
    eve_mode: str = "filter"
    seed: int = 1
    point: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", PolarizerModel.parse(self.model))
        if self.eve_model is not None:
            object.__setattr__(self, "eve_model", PolarizerModel.parse(self.eve_model))
        if int(self.n_pairs) != self.n_pairs or self.n_pairs < 1:
            raise ValueError(f"n_pairs must be a positive integer, got {self.n_pairs}")
        if self.eve_mode not in EVE_MODES:
            raise ValueError(f"eve_mode must be one of {EVE_MODES}")
        object.__setattr__(self, "settings_a", tuple(float(a) for a in self.settings_a))
        object.__setattr__(self, "settings_b", tuple(float(b) for b in self.settings_b))
        if self.eve is not None:
            object.__setattr__(self, "eve", tuple(float(e) for e in self.eve))

    @property
    def effective_eve_model(self) -> PolarizerModel:
        return self.eve_model or self.model

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "model": self.model.value,
            "d": self.delay.d, "tau": self.delay.tau, "k": self.delay.k,
            "settings_a": list(self.settings_a),
            "settings_b": list(self.settings_b),
            "eve": None if self.eve is None else list(self.eve),
            "eve_model": self.effective_eve_model.value if self.eve is not None else None,
            "eve_mode": self.eve_mode if self.eve is not None else None,
            "seed": self.seed,
            "point": self.point,
        }


class Detection(NamedTuple):
    x: int
    setting: int  # 1 or 2
    ticks: int


@dataclass
class DetectionLog:
    """One station's record of a run, as parallel arrays."""

    x: np.ndarray
    setting: np.ndarray
    ticks: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int8)
        self.setting = np.asarray(self.setting, dtype=np.int8)
        self.ticks = np.asarray(self.ticks, dtype=np.int64)
        if not (self.x.shape == self.setting.shape == self.ticks.shape):
            raise ValueError("log arrays must share one shape")

    def __len__(self) -> int:
        return int(self.x.size)

    @classmethod
    def from_detections(cls, detections: Sequence[Detection]) -> DetectionLog:
        if not detections:
            return cls(np.zeros(0), np.zeros(0), np.zeros(0))
        x, s, t = zip(*detections)
        return cls(x, s, t)


@dataclass(frozen=True)
class CoincidenceCounts:
    c_pp: int = 0
    c_pm: int = 0
    c_mp: int = 0
    c_mm: int = 0

    @property
    def total(self) -> int:
        return self.c_pp + self.c_pm + self.c_mp + self.c_mm

    def __add__(self, other: CoincidenceCounts) -> CoincidenceCounts:
        return CoincidenceCounts(self.c_pp + other.c_pp, self.c_pm + other.c_pm,
                                 self.c_mp + other.c_mp, self.c_mm + other.c_mm)


class Probabilities(NamedTuple):
    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float


@dataclass(frozen=True)
class WignerStats:
    p_pp_12: float
    p_pp_21: float
    p_pp_22: float
    p_mm_11: float
    S: float
    S_prime: float


@dataclass
class EkertReport:
    config: EkertConfig
    pairs_delivered: int
    counts: dict
    wigner: Optional[WignerStats]
    key_alice: np.ndarray = field(repr=False)
    key_bob: np.ndarray = field(repr=False)
    fidelity: float = float("nan")
    flags: tuple = ()

    @property
    def key_error_rate(self) -> float:
        return 1.0 - self.fidelity

    @property
    def coincidences(self) -> int:
        return sum(c.total for c in self.counts.values())

    def probabilities(self, i: int, j: int) -> Optional[Probabilities]:
        return estimate_probabilities(self.counts[(i, j)])


# -- per-event operations ---------------------------------------------------

def singlet_source_emit(s: RngStream) -> tuple[float, float]:
    psi = s.uniform() * TWO_PI
    return psi, psi + HALF_PI


def eve_transform(rngs_a: ActorStreams, rngs_b: ActorStreams, pair, psi_a, psi_b,
                  model, mode: str = "filter") -> Optional[tuple[float, float]]:
    """Pass a pair through Eve's two polarizers.

    Returns the forwarded polarizations, or None when the filter drops the pair.
    """
    model = PolarizerModel.parse(model)
    out1 = measure(model, rngs_a.polarizer, pair[0], psi_a)
    out2 = measure(model, rngs_b.polarizer, pair[1], psi_b)
    if mode == "filter" and (out1.channel or out2.channel):
        return None
    return out1.output_polarization, out2.output_polarization


def station_detect(rngs: ActorStreams, psi: float, settings, model, delay: DelayParams) -> Detection:
    model = PolarizerModel.parse(model)
    idx = rngs.setting.coin()
    phi = settings[idx]
    ch = measure(model, rngs.polarizer, psi, phi).channel
    T = float(max_delay(psi - phi, delay.d))
    return Detection(1 - 2 * ch, idx + 1, draw_time_tag(rngs.clock, T, delay.tau))


def simulate_pairs(cfg: EkertConfig) -> tuple[DetectionLog, DetectionLog]:
    """Per-pair reference run returning both detection logs (small N only)."""
    source, alice, bob, eve_a, eve_b = _streams(cfg)
    log_a, log_b = [], []
    for _ in range(cfg.n_pairs):
        pair = singlet_source_emit(source.emit)
        if cfg.eve is not None:
            pair = eve_transform(eve_a, eve_b, pair, cfg.eve[0], cfg.eve[1],
                                 cfg.effective_eve_model, cfg.eve_mode)
            if pair is None:
                continue
        log_a.append(station_detect(alice, pair[0], cfg.settings_a, cfg.model, cfg.delay))
        log_b.append(station_detect(bob, pair[1], cfg.settings_b, cfg.model, cfg.delay))
    return DetectionLog.from_detections(log_a), DetectionLog.from_detections(log_b)


# -- analysis ----------------------------------------------------------------

def _check_aligned(log_a: DetectionLog, log_b: DetectionLog):
    if len(log_a) != len(log_b):
        raise ValueError(f"logs are not event-aligned: {len(log_a)} vs {len(log_b)} entries")


def count_coincidences(log_a: DetectionLog, log_b: DetectionLog, pair: tuple[int, int],
                       k: int) -> CoincidenceCounts:
    _check_aligned(log_a, log_b)
    i, j = pair
    sel = (log_a.setting == i) & (log_b.setting == j) & coincident(log_a.ticks, log_b.ticks, k)
    # code 0: ++, 1: +-, 2: -+, 3: --
    code = 2 * (log_a.x[sel] < 0) + (log_b.x[sel] < 0)
    c = np.bincount(code.astype(np.int64), minlength=4)
    return CoincidenceCounts(int(c[0]), int(c[1]), int(c[2]), int(c[3]))


def estimate_probabilities(counts: CoincidenceCounts) -> Optional[Probabilities]:
    """Relative frequencies of the four outcomes; None when nothing coincided."""
    n = counts.total
    if n == 0:
        return None
    return Probabilities(counts.c_pp / n, counts.c_pm / n, counts.c_mp / n, counts.c_mm / n)


def wigner_statistics(p_pp_12: float, p_pp_21: float, p_pp_22: float, p_mm_11: float) -> WignerStats:
    s = p_pp_12 + p_pp_21 - p_pp_22
    return WignerStats(p_pp_12, p_pp_21, p_pp_22, p_mm_11, s, s + p_mm_11)


def wigner_from_counts(counts: dict) -> Optional[WignerStats]:
    p = {ij: estimate_probabilities(counts[ij]) for ij in SETTING_PAIRS}
    if any(v is None for v in p.values()):
        return None
    return wigner_statistics(p[(1, 2)].p_pp, p[(2, 1)].p_pp, p[(2, 2)].p_pp, p[(1, 1)].p_mm)


def key_bits(log_a: DetectionLog, log_b: DetectionLog, k: int) -> tuple[np.ndarray, np.ndarray]:
    _check_aligned(log_a, log_b)
    sel = (log_a.setting == 1) & (log_b.setting == 1) & coincident(log_a.ticks, log_b.ticks, k)
    alice = ((1 - log_a.x[sel].astype(np.int64)) // 2).astype(np.uint8)
    bob = ((1 + log_b.x[sel].astype(np.int64)) // 2).astype(np.uint8)
    return alice, bob


def extract_key(log_a: DetectionLog, log_b: DetectionLog, k: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Key from coincidences on the (1, 1) settings; fidelity is NaN without any."""
    alice, bob = key_bits(log_a, log_b, k)
    f = float(np.mean(alice == bob)) if alice.size else float("nan")
    return alice, bob, f


# -- runs --------------------------------------------------------------------

def _streams(cfg: EkertConfig):
    return tuple(ActorStreams(cfg.seed, actor, cfg.point)
                 for actor in (SOURCE, ALICE, BOB, EVE_A, EVE_B))


def _detect(rngs: ActorStreams, psi: np.ndarray, settings, model, delay: DelayParams) -> DetectionLog:
    m = psi.size
    idx = rngs.setting.coins(m).astype(np.int64)
    phi = np.asarray(settings)[idx]
    ch = channels(model, rngs.polarizer, psi, phi)
    T = max_delay(psi - phi, delay.d) * np.ones(m)
    ticks = ticks_from_uniform(rngs.clock.uniforms(m), T, delay.tau)
    return DetectionLog(1 - 2 * ch, idx + 1, ticks)


def simulate_chunk(cfg: EkertConfig, n: int, streams) -> tuple[DetectionLog, DetectionLog]:
    source, alice, bob, eve_a, eve_b = streams
    psi1 = source.emit.uniforms(n) * TWO_PI
    psi2 = psi1 + HALF_PI
    if cfg.eve is not None:
        em = cfg.effective_eve_model
        ch1 = channels(em, eve_a.polarizer, psi1, cfg.eve[0])
        ch2 = channels(em, eve_b.polarizer, psi2, cfg.eve[1])
        if cfg.eve_mode == "filter":
            keep = (ch1 == 0) & (ch2 == 0)
            m = int(np.count_nonzero(keep))
            psi1 = np.full(m, cfg.eve[0])
            psi2 = np.full(m, cfg.eve[1])
        else:
            psi1 = cfg.eve[0] + HALF_PI * ch1
            psi2 = cfg.eve[1] + HALF_PI * ch2
    return (_detect(alice, psi1, cfg.settings_a, cfg.model, cfg.delay),
            _detect(bob, psi2, cfg.settings_b, cfg.model, cfg.delay))


def iter_chunks(cfg: EkertConfig, chunk: int = CHUNK):
    """Yield event-aligned (log_a, log_b) blocks covering the whole run."""
    streams = _streams(cfg)
    left = cfg.n_pairs
    while left > 0:
        n = min(chunk, left)
        yield simulate_chunk(cfg, n, streams)
        left -= n


def run_ekert(cfg: EkertConfig, chunk: int = CHUNK) -> EkertReport:
    counts = {ij: CoincidenceCounts() for ij in SETTING_PAIRS}
    ka, kb = [], []
    delivered = 0
    k = cfg.delay.k
    for log_a, log_b in iter_chunks(cfg, chunk):
        delivered += len(log_a)
        for ij in SETTING_PAIRS:
            counts[ij] = counts[ij] + count_coincidences(log_a, log_b, ij, k)
        a, b = key_bits(log_a, log_b, k)
        ka.append(a)
        kb.append(b)
    key_a = np.concatenate(ka)
    key_b = np.concatenate(kb)
    flags = []
    wig = wigner_from_counts(counts)
    if wig is None:
        flags.append("no-coincidences")
    if key_a.size:
        f = float(np.mean(key_a == key_b))
    else:
        f = float("nan")
        flags.append("empty-key")
    return EkertReport(cfg, delivered, counts, wig, key_a, key_b, f, tuple(flags))


def sweep_settings(theta: float) -> dict:
    return {"settings_a": (0.0, -float(theta)), "settings_b": (0.0, float(theta))}


def wigner_curve_sweep(cfg: EkertConfig, thetas: Sequence[float]) -> list[tuple[float, float, float, float]]:
    """(theta, S, S', F) with settings phi_A = (0, -theta), phi_B = (0, +theta)."""
    rows = []
    for i, th in enumerate(thetas):
        r = run_ekert(replace(cfg, point=i, **sweep_settings(th)))
        s = r.wigner.S if r.wigner else float("nan")
        sp = r.wigner.S_prime if r.wigner else float("nan")
        rows.append((float(th), s, sp, r.fidelity))
    return rows


def pooled_ppp(cfg: EkertConfig, alpha: float, beta: float) -> tuple[float, int]:
    """P_++(alpha, beta) with every setting of Alice at alpha and of Bob at beta.

    All four setting combinations then measure the same pair of orientations
    and their coincidences are pooled.  Returns (P_++, coincidences).
    """
    r = run_ekert(replace(cfg, settings_a=(alpha, alpha), settings_b=(beta, beta)))
    total = CoincidenceCounts()
    for c in r.counts.values():
        total = total + c
    p = estimate_probabilities(total)
    return (float("nan") if p is None else p.p_pp), total.total


def ppp_curve(cfg: EkertConfig, betas: Sequence[float], alpha: float = 0.0) -> list[tuple[float, float, int]]:
    """(beta, P_++(alpha, beta), coincidences), one pooled run per beta."""
    return [(float(b), *pooled_ppp(replace(cfg, point=i), alpha, b)) for i, b in enumerate(betas)]
