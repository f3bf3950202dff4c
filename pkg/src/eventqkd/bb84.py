"""BB84 key exchange, photon by photon.

Alice sends a randomly polarized photon through her polarizer, set at one of
0, 45, 90 or 135 degrees, and keeps it only if it leaves through channel 0.
0 and 45 degrees encode bit 0, 90 and 135 degrees bit 1.  Bob measures in the
rectilinear (0 deg) or diagonal (45 deg) basis, both rotated by ``tilt``.  An
intercept-resend Eve measures every photon in a random basis and resends it
polarized along her outcome.  Sifting keeps the events where Bob's basis label
matches Alice's.

The per-photon functions (``alice_prepare``, ``eve_intercept_resend``,
``bob_measure``) document the protocol and are used by ``simulate_events``;
``run_bb84`` computes the same thing on arrays.  Both draw from the same
streams in the same order, so they agree bit for bit.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .polarizer import HALF_PI, PolarizerModel, channels, measure
from .rng import ALICE, BOB, EVE_A, ActorStreams

QUARTER_PI = 0.25 * np.pi
TWO_PI = 2.0 * np.pi
CHUNK = 1 << 18


@dataclass(frozen=True)
class Bb84Config:
    n_events: int = 100_000
    model: PolarizerModel = PolarizerModel.PP
    eve: bool = False
    tilt: float = 0.0
    seed: int = 1
    point: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", PolarizerModel.parse(self.model))
        if int(self.n_events) != self.n_events or self.n_events < 1:
            raise ValueError(f"n_events must be a positive integer, got {self.n_events}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        return d


class PreparedPhoton(NamedTuple):
    polarization: float
    bit: int
    basis: int  # 0 rectilinear, 1 diagonal


class Bb84EventRecord(NamedTuple):
    alice_bit: int
    alice_angle: float
    bob_basis: float
    bob_bit: int
    basis_match: bool


@dataclass
class Bb84Report:
    photons_sent: int
    sifted_length: int
    fidelity: float
    key_alice: np.ndarray = field(repr=False)
    key_bob: np.ndarray = field(repr=False)
    n_events: int = 0
    empty_key: bool = False

    @property
    def error_rate(self) -> float:
        return 1.0 - self.fidelity


def _streams(cfg: Bb84Config):
    return (ActorStreams(cfg.seed, ALICE, cfg.point),
            ActorStreams(cfg.seed, EVE_A, cfg.point),
            ActorStreams(cfg.seed, BOB, cfg.point))


def alice_prepare(rngs: ActorStreams, model) -> Optional[PreparedPhoton]:
    model = PolarizerModel.parse(model)
    psi = rngs.emit.uniform() * TWO_PI
    idx = 2 * rngs.setting.coin() + rngs.setting.coin()
    phi = idx * QUARTER_PI
    if measure(model, rngs.polarizer, psi, phi).channel != 0:
        return None
    return PreparedPhoton(phi, idx // 2, idx % 2)


def eve_intercept_resend(rngs: ActorStreams, polarization: float, model) -> float:
    model = PolarizerModel.parse(model)
    phi = rngs.setting.coin() * QUARTER_PI
    return measure(model, rngs.polarizer, polarization, phi).output_polarization


def bob_measure(rngs: ActorStreams, polarization: float, model, tilt: float = 0.0) -> tuple[int, int]:
    """Returns (basis label, bit); the basis label is 0 or 1, the polarizer
    sits at ``label * 45 deg + tilt``."""
    model = PolarizerModel.parse(model)
    label = rngs.setting.coin()
    ch = measure(model, rngs.polarizer, polarization, label * QUARTER_PI + tilt).channel
    return label, ch


def simulate_events(cfg: Bb84Config) -> tuple[int, list[Bb84EventRecord]]:
    """Per-photon reference run; returns (photons_sent, records)."""
    alice, eve, bob = _streams(cfg)
    records = []
    sent = 0
    for _ in range(cfg.n_events):
        photon = alice_prepare(alice, cfg.model)
        if photon is None:
            continue
        sent += 1
        pol = photon.polarization
        if cfg.eve:
            pol = eve_intercept_resend(eve, pol, cfg.model)
        label, bit = bob_measure(bob, pol, cfg.model, cfg.tilt)
        records.append(Bb84EventRecord(photon.bit, photon.polarization,
                                       label * QUARTER_PI + cfg.tilt, bit,
                                       label == photon.basis))
    return sent, records


def sift(records: Sequence[Bb84EventRecord]) -> tuple[np.ndarray, np.ndarray]:
    keep = [r for r in records if r.basis_match]
    return (np.array([r.alice_bit for r in keep], dtype=np.uint8),
            np.array([r.bob_bit for r in keep], dtype=np.uint8))


def fidelity(key_alice: np.ndarray, key_bob: np.ndarray) -> tuple[float, bool]:
    """Fraction of agreeing positions, and whether the key was empty.

    An empty key has fidelity 1 by convention; the flag says so.
    """
    if len(key_alice) != len(key_bob):
        raise ValueError("keys differ in length")
    if len(key_alice) == 0:
        return 1.0, True
    return float(np.mean(np.asarray(key_alice) == np.asarray(key_bob))), False


def _run_chunk(n, cfg, alice, eve, bob):
    psi = alice.emit.uniforms(n) * TWO_PI
    c = alice.setting.coins(2 * n).reshape(n, 2).astype(np.int64)
    idx = 2 * c[:, 0] + c[:, 1]
    phi_a = idx * QUARTER_PI
    passed = channels(cfg.model, alice.polarizer, psi, phi_a) == 0
    idx = idx[passed]
    pol = phi_a[passed]
    m = pol.size
    if cfg.eve:
        phi_e = eve.setting.coins(m) * QUARTER_PI
        pol = phi_e + HALF_PI * channels(cfg.model, eve.polarizer, pol, phi_e)
    label = bob.setting.coins(m).astype(np.int64)
    bob_bit = channels(cfg.model, bob.polarizer, pol, label * QUARTER_PI + cfg.tilt)
    match = label == idx % 2
    return m, (idx[match] // 2).astype(np.uint8), bob_bit[match].astype(np.uint8)


def run_bb84(cfg: Bb84Config) -> Bb84Report:
    alice, eve, bob = _streams(cfg)
    sent = 0
    ka, kb = [], []
    left = cfg.n_events
    while left > 0:
        n = min(CHUNK, left)
        m, a, b = _run_chunk(n, cfg, alice, eve, bob)
        sent += m
        ka.append(a)
        kb.append(b)
        left -= n
    key_a = np.concatenate(ka)
    key_b = np.concatenate(kb)
    f, empty = fidelity(key_a, key_b)
    if empty:
        warnings.warn("sifted key is empty; fidelity set to 1", RuntimeWarning, stacklevel=2)
    return Bb84Report(sent, int(key_a.size), f, key_a, key_b, cfg.n_events, empty)


def misalignment_sweep(cfg: Bb84Config, tilts: Sequence[float]) -> list[tuple[float, float]]:
    """Fidelity at each tilt; point ``i`` draws from streams derived from ``i``."""
    if cfg.eve:
        raise ValueError("the misalignment sweep is defined without an eavesdropper")
    return [(float(t), run_bb84(replace(cfg, tilt=float(t), point=i)).fidelity)
            for i, t in enumerate(tilts)]
