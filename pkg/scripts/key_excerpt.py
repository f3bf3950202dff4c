"""Print the first bits of Alice's and Bob's sifted keys, marking disagreements.

    python3 scripts/key_excerpt.py bb84 --eve
    python3 scripts/key_excerpt.py ekert --model pp --d 4
"""
from __future__ import annotations

import argparse

import numpy as np

from eventqkd.bb84 import Bb84Config, run_bb84
from eventqkd.ekert import EkertConfig, run_ekert
from eventqkd.timetag import DelayParams


def show(ka: np.ndarray, kb: np.ndarray, n: int, width: int = 50) -> None:
    ka, kb = ka[:n], kb[:n]
    for start in range(0, len(ka), width):
        a, b = ka[start:start + width], kb[start:start + width]
        print("A " + "".join(map(str, a)))
        print("B " + "".join(map(str, b)))
        print("  " + "".join("^" if x != y else " " for x, y in zip(a, b)).rstrip())


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description="sifted-key excerpt")
    p.add_argument("protocol", choices=("bb84", "ekert"))
    p.add_argument("--model", choices=("pp", "dp"), default=None)
    p.add_argument("--eve", action="store_true", help="bb84 only")
    p.add_argument("--d", type=float, default=None)
    p.add_argument("--events", type=int, default=100_000)
    p.add_argument("--pairs", type=int, default=10_000_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--bits", type=int, default=100)
    args = p.parse_args(argv)

    if args.protocol == "bb84":
        r = run_bb84(Bb84Config(args.events, args.model or "pp", args.eve, seed=args.seed))
        fid = r.fidelity
    else:
        model = args.model or "dp"
        d = args.d if args.d is not None else (2.0 if model == "dp" else 4.0)
        r = run_ekert(EkertConfig(args.pairs, model, DelayParams(d), seed=args.seed))
        fid = r.fidelity
    show(r.key_alice, r.key_bob, args.bits)
    print(f"key length {r.key_alice.size}, error rate {1 - fid:.2e}")


if __name__ == "__main__":
    main()
