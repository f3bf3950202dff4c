"""Command-line experiment runner.

    eventqkd --protocol bb84 --events 100000 --eve
    eventqkd --protocol ekert --pairs 10000000 --model dp --d 2 --tau 0.00025 \\
             --k 1 --theta-grid-deg 0:90:5 --seed 42 --out fig5.csv
    eventqkd --config recipes/fig1_misalignment_pp.json

Output is CSV (``#`` header lines, then a header row and data) or JSON with
the same content.  The header echoes the full experiment spec and the seed, so
the same spec always produces the same bytes.

Exit status: 0 on success, 1 on a usage error, 2 when the run fails.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import __version__
from . import analytics as an
from .bb84 import Bb84Config, run_bb84
from .ekert import EkertConfig, pooled_ppp, run_ekert, sweep_settings
from .rng import RngStream
from .timetag import (WEIGHT_GRID_T, WEIGHT_GRID_W, DelayParams, weight_closed_form,
                      weight_monte_carlo)

PROTOCOLS = ("bb84", "ekert", "oracle-check")
SWEEPS = {"theta": "theta_grid_deg", "tilt": "tilt_grid_deg",
          "phi_b": "phi_b_grid_deg", "eve_a": "eve_a_grid_deg"}

BB84_COLUMNS = ["events", "photons_sent", "sifted_length", "fidelity"]
EKERT_COLUMNS = ["p_pp_12", "p_pp_21", "p_pp_22", "p_mm_11", "S", "S_prime",
                 "fidelity", "coincidences"]
PPP_COLUMNS = ["phi_a_deg", "phi_b_deg", "p_pp", "coincidences"]
ORACLE_COLUMNS = ["variable", "value", "quantity", "simulated", "closed_form",
                  "abs_diff", "tolerance", "status"]

SOURCES = {
    "events": "bb84.run_bb84 -> Bb84Config.n_events",
    "photons_sent": "bb84.run_bb84 -> Bb84Report.photons_sent",
    "sifted_length": "bb84.run_bb84 -> Bb84Report.sifted_length",
    "fidelity": "run_bb84 / run_ekert -> report.fidelity",
    "p_pp_12": "ekert.run_ekert -> estimate_probabilities(counts[1,2]).p_pp",
    "p_pp_21": "ekert.run_ekert -> estimate_probabilities(counts[2,1]).p_pp",
    "p_pp_22": "ekert.run_ekert -> estimate_probabilities(counts[2,2]).p_pp",
    "p_mm_11": "ekert.run_ekert -> estimate_probabilities(counts[1,1]).p_mm",
    "S": "ekert.wigner_statistics -> WignerStats.S",
    "S_prime": "ekert.wigner_statistics -> WignerStats.S_prime",
    "coincidences": "ekert.count_coincidences, summed over setting pairs",
    "p_pp": "ekert.pooled_ppp (all four setting combinations at one orientation pair)",
    "simulated": "simulation statistic named in 'quantity'",
    "closed_form": "analytics.* or timetag.weight_closed_form",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_grid(text: str) -> list[float]:
    """``"0:90:15"`` (inclusive) or ``"0,15,30"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(max(n, 0))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:stop:step or a,b,c")


@dataclass
class ExperimentSpec:
    protocol: str = "bb84"
    seed: int = 1
    model: str = "pp"
    events: int = 100_000
    pairs: int = 10_000_000
    d: Optional[float] = None
    tau: float = 0.00025
    k: int = 1
    tilt_deg: float = 0.0
    eve: bool = False
    eve_a_deg: Optional[float] = None
    eve_b_deg: Optional[float] = None
    eve_perpendicular: bool = False
    eve_model: Optional[str] = None
    eve_mode: str = "filter"
    theta_deg: Optional[float] = None
    settings_deg: Optional[list] = None
    sweep: Optional[list] = None  # [variable, [grid values in degrees]]
    tolerance: float = 0.02
    out: str = field(default="-", metadata={"echo": False})
    format: str = "csv"
    workers: int = field(default=1, metadata={"echo": False})

    @property
    def delay_d(self) -> float:
        if self.d is not None:
            return self.d
        return 4.0 if self.model == "pp" else 2.0

    def to_dict(self) -> dict:
        # where the output goes and how it is computed are not part of the experiment
        d = {f.name: v for f, v in zip(fields(self), asdict(self).values())
             if f.metadata.get("echo", True)}
        d["d"] = self.delay_d
        return d


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eventqkd", description="Event-by-event BB84 / Ekert simulator.")
    p.add_argument("--config", help="JSON experiment spec; explicit flags override it")
    p.add_argument("--protocol", choices=PROTOCOLS, default="bb84")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--model", choices=("pp", "dp"), default="pp")
    p.add_argument("--events", type=int, default=100_000, help="BB84 events")
    p.add_argument("--pairs", type=int, default=10_000_000, help="Ekert source pairs")
    p.add_argument("--d", type=float, default=None,
                   help="time-delay parameter (default 4 for pp, 2 for dp)")
    p.add_argument("--tau", type=float, default=0.00025, help="time-tag resolution")
    p.add_argument("--k", type=int, default=1, help="window W = k * tau")
    p.add_argument("--tilt-deg", type=float, default=0.0)
    p.add_argument("--eve", action="store_true")
    p.add_argument("--eve-a-deg", type=float, default=None)
    p.add_argument("--eve-b-deg", type=float, default=None)
    p.add_argument("--eve-perpendicular", action="store_true",
                   help="Eve's second polarizer at eve_a + 90 deg")
    p.add_argument("--eve-model", choices=("pp", "dp"), default=None)
    p.add_argument("--eve-mode", choices=("filter", "resend"), default="filter")
    p.add_argument("--theta-deg", type=float, default=None)
    p.add_argument("--settings-deg", type=float, nargs=4, default=None,
                   metavar=("A1", "A2", "B1", "B2"))
    p.add_argument("--theta-grid-deg", type=parse_grid, default=None)
    p.add_argument("--tilt-grid-deg", type=parse_grid, default=None)
    p.add_argument("--phi-b-grid-deg", type=parse_grid, default=None,
                   help="P_++(0, phi_b) curve, one pooled run per point")
    p.add_argument("--eve-a-grid-deg", type=parse_grid, default=None)
    p.add_argument("--tolerance", type=float, default=0.02)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    return p


def parse_args(argv=None) -> ExperimentSpec:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        known = {a.dest for a in parser._actions}
        sweep = cfg.pop("sweep", None)
        if sweep:
            cfg[SWEEPS[sweep[0]]] = ",".join(str(v) for v in sweep[1])
        unknown = set(cfg) - known
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        for key, action in ((a.dest, a) for a in parser._actions):
            if key in cfg and isinstance(cfg[key], str) and action.type is parse_grid:
                cfg[key] = parse_grid(cfg[key])
        parser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    try:
        return _to_spec(args)
    except UsageError as exc:
        parser.error(str(exc))


def _to_spec(args) -> ExperimentSpec:
    if not 0.0 < args.tau < 1.0:
        raise UsageError(f"--tau must lie in (0, 1), got {args.tau}")
    if args.k < 1:
        raise UsageError(f"--k must be >= 1, got {args.k}")
    if args.events < 1 or args.pairs < 1:
        raise UsageError("--events and --pairs must be >= 1")
    if args.d is not None and args.d < 0:
        raise UsageError("--d must be >= 0")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    grids = [(var, getattr(args, dest)) for var, dest in SWEEPS.items()
             if getattr(args, dest) is not None]
    if len(grids) > 1:
        raise UsageError("give at most one grid flag")
    sweep = [grids[0][0], list(grids[0][1])] if grids else None
    if sweep and not sweep[1]:
        raise UsageError("empty grid")
    if sweep and sweep[0] == "tilt" and args.protocol == "ekert":
        raise UsageError("--tilt-grid-deg applies to bb84")
    if sweep and sweep[0] != "tilt" and args.protocol == "bb84":
        raise UsageError(f"--{sweep[0].replace('_', '-')}-grid-deg applies to ekert")
    eve_angles = args.eve_a_deg is not None or args.eve_b_deg is not None or args.eve_perpendicular
    eve = args.eve or eve_angles or (sweep is not None and sweep[0] == "eve_a")
    if args.protocol != "bb84" and eve:
        if args.eve_a_deg is None and not (sweep and sweep[0] == "eve_a"):
            args.eve_a_deg = 45.0
        if args.eve_b_deg is None:
            args.eve_perpendicular = True
        elif args.eve_perpendicular:
            raise UsageError("--eve-b-deg and --eve-perpendicular are exclusive")
    if args.theta_deg is not None and args.settings_deg is not None:
        raise UsageError("--theta-deg and --settings-deg are exclusive")
    return ExperimentSpec(
        protocol=args.protocol, seed=args.seed, model=args.model, events=args.events,
        pairs=args.pairs, d=args.d, tau=args.tau, k=args.k, tilt_deg=args.tilt_deg,
        eve=bool(eve), eve_a_deg=args.eve_a_deg, eve_b_deg=args.eve_b_deg,
        eve_perpendicular=args.eve_perpendicular, eve_model=args.eve_model,
        eve_mode=args.eve_mode, theta_deg=args.theta_deg,
        settings_deg=list(args.settings_deg) if args.settings_deg else None,
        sweep=sweep, tolerance=args.tolerance, out=args.out, format=args.format,
        workers=args.workers)


# -- experiment construction ------------------------------------------------

def _eve_angles(spec: ExperimentSpec, eve_a_deg: Optional[float] = None):
    a = spec.eve_a_deg if eve_a_deg is None else eve_a_deg
    b = a + 90.0 if spec.eve_perpendicular else spec.eve_b_deg
    return math.radians(a), math.radians(b)


def bb84_config(spec: ExperimentSpec, tilt_deg: Optional[float] = None, point: int = 0) -> Bb84Config:
    tilt = spec.tilt_deg if tilt_deg is None else tilt_deg
    return Bb84Config(spec.events, spec.model, spec.eve, math.radians(tilt), spec.seed, point)


def ekert_config(spec: ExperimentSpec, point: int = 0, theta_deg: Optional[float] = None,
                 eve_a_deg: Optional[float] = None) -> EkertConfig:
    kw = {}
    theta = spec.theta_deg if theta_deg is None else theta_deg
    if theta is not None:
        kw.update(sweep_settings(math.radians(theta)))
    elif spec.settings_deg:
        a1, a2, b1, b2 = (math.radians(v) for v in spec.settings_deg)
        kw.update(settings_a=(a1, a2), settings_b=(b1, b2))
    eve = _eve_angles(spec, eve_a_deg) if spec.eve else None
    return EkertConfig(
        n_pairs=spec.pairs, model=spec.model,
        delay=DelayParams(spec.delay_d, spec.tau, spec.k),
        eve=eve, eve_model=spec.eve_model, eve_mode=spec.eve_mode,
        seed=spec.seed, point=point, **kw)


def _bb84_row(cfg: Bb84Config) -> list:
    r = run_bb84(cfg)
    return [cfg.n_events, r.photons_sent, r.sifted_length, r.fidelity]


def _ekert_row(cfg: EkertConfig) -> list:
    r = run_ekert(cfg)
    w = r.wigner
    vals = [w.p_pp_12, w.p_pp_21, w.p_pp_22, w.p_mm_11, w.S, w.S_prime] if w else [math.nan] * 6
    return vals + [r.fidelity, r.coincidences]


def _ppp_row(cfg: EkertConfig, beta_deg: float) -> list:
    p, n = pooled_ppp(cfg, 0.0, math.radians(beta_deg))
    return [0.0, beta_deg, p, n]


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(fn, *zip(*jobs)))
    return [fn(*job) for job in jobs]


def _sweep(spec: ExperimentSpec):
    return (spec.sweep[0], spec.sweep[1]) if spec.sweep else (None, [])


def run_bb84_spec(spec: ExperimentSpec):
    var, grid = _sweep(spec)
    if var == "tilt":
        rows = _map(_bb84_row, [(bb84_config(spec, t, i),) for i, t in enumerate(grid)], spec.workers)
        return ["tilt_deg"] + BB84_COLUMNS, [[t] + r for t, r in zip(grid, rows)]
    return BB84_COLUMNS, [_bb84_row(bb84_config(spec))]


def run_ekert_spec(spec: ExperimentSpec):
    var, grid = _sweep(spec)
    if var == "phi_b":
        jobs = [(ekert_config(spec, i), b) for i, b in enumerate(grid)]
        return PPP_COLUMNS, _map(_ppp_row, jobs, spec.workers)
    if var == "theta":
        jobs = [(ekert_config(spec, i, theta_deg=t),) for i, t in enumerate(grid)]
        return ["theta_deg"] + EKERT_COLUMNS, [[t] + r for t, r in zip(grid, _map(_ekert_row, jobs, spec.workers))]
    if var == "eve_a":
        jobs = [(ekert_config(spec, i, eve_a_deg=a),) for i, a in enumerate(grid)]
        return ["eve_a_deg"] + EKERT_COLUMNS, [[a] + r for a, r in zip(grid, _map(_ekert_row, jobs, spec.workers))]
    row = _ekert_row(ekert_config(spec))
    if spec.theta_deg is not None:
        return ["theta_deg"] + EKERT_COLUMNS, [[spec.theta_deg] + row]
    return ["run"] + EKERT_COLUMNS, [[0] + row]


def _check(var, value, quantity, sim, theory, tol):
    diff = abs(sim - theory)
    ok = diff <= tol
    return [var, value, quantity, sim, theory, diff, tol, "PASS" if ok else "FAIL"]


def run_oracle_spec(spec: ExperimentSpec):
    var, grid = _sweep(spec)
    tol = spec.tolerance
    rows = []
    if var is None:
        # coincidence weight: Monte Carlo against the closed form
        s = RngStream(spec.seed, (0, 99))
        for t1 in WEIGHT_GRID_T:
            for t2 in WEIGHT_GRID_T:
                for w in WEIGHT_GRID_W:
                    mc = weight_monte_carlo(s, t1, t2, w, spec.events)
                    rows.append(_check("T1,T2,W", f"{t1},{t2},{w}", "weight",
                                       mc, float(weight_closed_form(t1, t2, w)), tol))
        return ORACLE_COLUMNS, rows
    if var == "tilt":
        theory = an.bb84_fidelity_theory if spec.model == "pp" else an.bb84_fidelity_dp_sign_rule
        for i, t in enumerate(grid):
            r = run_bb84(bb84_config(spec, t, i))
            rows.append(_check("tilt_deg", t, "fidelity", r.fidelity, float(theory(math.radians(t))), tol))
        return ORACLE_COLUMNS, rows
    if var == "phi_b":
        for i, b in enumerate(grid):
            cfg = ekert_config(spec, i)
            p, _ = pooled_ppp(cfg, 0.0, math.radians(b))
            theory, _ = an.ppp_theory(spec.model, spec.delay_d, 0.0, math.radians(b))
            rows.append(_check("phi_b_deg", b, "p_pp", p, theory, tol))
        return ORACLE_COLUMNS, rows
    if var == "theta":
        for i, t in enumerate(grid):
            r = run_ekert(ekert_config(spec, i, theta_deg=t))
            th = math.radians(t)
            if spec.eve:
                pa, pb = _eve_angles(spec)
                s, sp = an.qm_wigner_product(pa, pb, th)
                rows.append(_check("theta_deg", t, "S", r.wigner.S, float(s), tol))
                rows.append(_check("theta_deg", t, "S_prime", r.wigner.S_prime, float(sp), tol))
                rows.append(_check("theta_deg", t, "fidelity", r.fidelity, float(an.product_fidelity(pa, pb)), tol))
            else:
                s, _ = an.wigner_theory(spec.model, spec.delay_d, th)
                rows.append(_check("theta_deg", t, "S", r.wigner.S, s, tol))
        return ORACLE_COLUMNS, rows
    if var == "eve_a":
        th = math.radians(spec.theta_deg if spec.theta_deg is not None else 30.0)
        for i, a in enumerate(grid):
            cfg = ekert_config(spec, i, theta_deg=math.degrees(th), eve_a_deg=a)
            r = run_ekert(cfg)
            pa, pb = cfg.eve
            s, sp = an.qm_wigner_product(pa, pb, th)
            rows.append(_check("eve_a_deg", a, "S", r.wigner.S, float(s), tol))
            rows.append(_check("eve_a_deg", a, "S_prime", r.wigner.S_prime, float(sp), tol))
            rows.append(_check("eve_a_deg", a, "fidelity", r.fidelity, float(an.product_fidelity(pa, pb)), tol))
        return ORACLE_COLUMNS, rows
    raise UsageError(f"oracle-check has no recipe for sweep {var!r}")


RUNNERS = {"bb84": run_bb84_spec, "ekert": run_ekert_spec, "oracle-check": run_oracle_spec}


# -- output -------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if math.isnan(v) else v
    if isinstance(v, np.integer):
        return int(v)
    return v


def header(spec: ExperimentSpec, columns) -> dict:
    return {
        "artifact": f"eventqkd {__version__}",
        "protocol": spec.protocol,
        "seed": spec.seed,
        "spec": spec.to_dict(),
        "sources": {c: SOURCES.get(c, "experiment grid / configuration") for c in columns},
    }


def render(spec: ExperimentSpec, columns, rows) -> str:
    head = header(spec, columns)
    if spec.format == "json":
        doc = dict(head, columns=list(columns),
                   rows=[[_jsonable(v) for v in row] for row in rows])
        if spec.protocol == "oracle-check":
            doc["overall"] = _overall(rows)
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# {head['artifact']}\n")
    buf.write(f"# protocol: {spec.protocol}\n")
    buf.write(f"# seed: {spec.seed}\n")
    buf.write(f"# spec: {json.dumps(head['spec'], sort_keys=True)}\n")
    for c in columns:
        buf.write(f"# column {c}: {head['sources'][c]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    if spec.protocol == "oracle-check":
        buf.write(f"# overall: {_overall(rows)}\n")
    return buf.getvalue()


def _overall(rows) -> str:
    return "PASS" if all(r[-1] == "PASS" for r in rows) else "FAIL"


def run(spec: ExperimentSpec) -> int:
    try:
        columns, rows = RUNNERS[spec.protocol](spec)
        text = render(spec, columns, rows)
    except UsageError as exc:
        print(f"eventqkd: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"eventqkd: run failed: {exc!r}", file=sys.stderr)
        return 2
    try:
        if spec.out == "-":
            sys.stdout.write(text)
        else:
            with open(spec.out, "w", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        print(f"eventqkd: cannot write {spec.out}: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
