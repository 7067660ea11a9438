"""Command-line front end: ``robustbf {solve,campaign,validate}``.

A run is described by one JSON document.  Powers are given in dBm and
SINRs in dB; conversion to linear units happens here and nowhere else.
Every field of the simulation block is required so that a config file is a
complete record of the experiment.

Exit codes: 0 success, 2 infeasible instance (``solve`` only), 1 error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from robustbf.sdp import SolverConfig
from robustbf.sim import PIPELINE_SOLVER, SCHEMES, SimConfig, _json_default, rows_to_csv, run_campaign, run_trial

log = logging.getLogger("robustbf")

SIM_FIELDS = tuple(f.name for f in dataclasses.fields(SimConfig))
EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything one invocation needs.  ``sim`` holds boundary units (dBm, dB)."""

    sim: SimConfig
    schemes: tuple = SCHEMES
    sweep: tuple | None = None
    n_error_samples: int = 1000
    n_tries: int = 50
    trial: int = 0
    solver: SolverConfig = field(default_factory=lambda: PIPELINE_SOLVER)
    out_dir: str = "out"

    def to_dict(self):
        d = {
            "sim": dataclasses.asdict(self.sim),
            "schemes": list(self.schemes),
            "n_error_samples": self.n_error_samples,
            "n_tries": self.n_tries,
            "trial": self.trial,
            "solver": dataclasses.asdict(self.solver),
            "out_dir": self.out_dir,
        }
        if self.sweep is not None:
            d["sweep"] = {"param": self.sweep[0], "values": list(self.sweep[1])}
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - {"sim", "schemes", "sweep", "n_error_samples", "n_tries", "trial", "solver", "out_dir"}
        if unknown:
            raise ConfigError(f"unknown field {sorted(unknown)[0]!r}")
        if "sim" not in d:
            raise ConfigError("missing field 'sim'")
        s = d["sim"]
        if not isinstance(s, dict):
            raise ConfigError("field 'sim' must be an object")
        for name in SIM_FIELDS:
            if name not in s:
                raise ConfigError(f"missing field 'sim.{name}'")
        extra = set(s) - set(SIM_FIELDS)
        if extra:
            raise ConfigError(f"unknown field 'sim.{sorted(extra)[0]}'")
        try:
            sim = SimConfig(**s)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field 'sim': {exc}") from None

        schemes = tuple(d.get("schemes", SCHEMES))
        for name in schemes:
            if name not in SCHEMES:
                raise ConfigError(f"field 'schemes': unknown scheme {name!r}")
        if not schemes:
            raise ConfigError("field 'schemes' is empty")

        sweep = None
        if d.get("sweep") is not None:
            sw = d["sweep"]
            if not isinstance(sw, dict) or "param" not in sw or "values" not in sw:
                raise ConfigError("field 'sweep' needs 'param' and 'values'")
            if sw["param"] not in SIM_FIELDS or sw["param"] in ("trials", "seed"):
                raise ConfigError(f"field 'sweep.param': cannot sweep {sw['param']!r}")
            vals = list(sw["values"])
            if not vals:
                raise ConfigError("field 'sweep.values' is empty")
            for v in vals:
                try:
                    sim.replace(**{sw["param"]: v})
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"field 'sweep.values': {exc}") from None
            sweep = (sw["param"], tuple(vals))

        out = {}
        for name, lo in (("n_error_samples", 0), ("n_tries", 1), ("trial", 0)):
            v = d.get(name, getattr(cls, name))
            if not isinstance(v, int) or isinstance(v, bool) or v < lo:
                raise ConfigError(f"field {name!r} must be an integer >= {lo}")
            out[name] = v
        try:
            solver = SolverConfig(**d.get("solver", dataclasses.asdict(PIPELINE_SOLVER)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field 'solver': {exc}") from None
        out_dir = d.get("out_dir", "out")
        if not isinstance(out_dir, str):
            raise ConfigError("field 'out_dir' must be a string")
        return cls(sim=sim, schemes=schemes, sweep=sweep, solver=solver, out_dir=out_dir, **out)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(d)


def load_config(path, overrides=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    cfg = RunConfig.from_json(text)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if "out_dir" in overrides:
        cfg.out_dir = overrides.pop("out_dir")
    if overrides:
        try:
            cfg.sim = cfg.sim.replace(**overrides)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return cfg


class Writer:
    """Single owner of the output directory; files are replaced atomically."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"output directory {out_dir!r} is not writable: {exc.strerror}") from None
        if not os.access(out_dir, os.W_OK):
            raise ConfigError(f"output directory {out_dir!r} is not writable")
        self.written = []

    def write(self, name, text):
        path = os.path.join(self.out_dir, name)
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=".tmp-")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
        self.written.append(path)
        return path


def _fmt_dbm(x):
    return "-" if x is None or not np.isfinite(x) else f"{x:.2f} dBm"


def _fmt_ci(r):
    lo, hi = r["power_ci95_low_dbm"], r["power_ci95_high_dbm"]
    return f"[{lo:.2f}, {hi:.2f}]" if np.isfinite(lo) and np.isfinite(hi) else "-"


def _print_table(rows, stream):
    hdr = f"{'sweep':>18}  {'scheme':<10} {'feasible':>9} {'power':>13} {'95% CI':>17} {'secrecy L1':>16} {'PU interference':>16} " \
          f"{'sec viol':>9} {'int viol':>9} {'rank-1':>7} {'solve':>10}"
    print(hdr, file=stream)
    for r in rows:
        sw = f"{r['sweep_param']}={r['sweep_value']}" if r["sweep_value"] is not None else "-"
        sec = r["mean_secrecy_l1_bps_hz"]
        ro = r["rank_one_rate"]
        print(f"{sw:>18}  {r['scheme']:<10} {r['trials_feasible']:>4}/{r['trials_total']:<4} "
              f"{_fmt_dbm(r['mean_power_dbm']):>13} {_fmt_ci(r):>17} "
              f"{(f'{sec:.3f} bit/s/Hz' if np.isfinite(sec) else '-'):>16} "
              f"{_fmt_dbm(r['mean_pu_interference_dbm']):>16} "
              f"{100 * r['secrecy_violation_rate']:>8.1f}% {100 * r['interference_violation_rate']:>8.1f}% "
              f"{(f'{100 * ro:.0f}%' if np.isfinite(ro) else '-'):>7} {r['mean_solve_ms']:>7.0f} ms", file=stream)


def cmd_solve(cfg: RunConfig, stream=None):
    stream = stream or sys.stdout
    writer = Writer(cfg.out_dir)
    res, sols = run_trial(cfg.sim, cfg.trial, cfg.schemes, cfg.n_error_samples, cfg.n_tries, cfg.solver,
                          return_solutions=True)
    metrics = {name: res[name].to_dict() for name in cfg.schemes}
    solutions = {name: json.loads(sols[name].to_json()) for name in cfg.schemes}
    writer.write("solution.json", json.dumps({"config": cfg.to_dict(), "solutions": solutions}, indent=1))
    writer.write("metrics.json", json.dumps(metrics, indent=1, default=_json_default))
    for name in cfg.schemes:
        m = metrics[name]
        if m["status"] == "solved":
            print(f"{name:<10} solved  power {m['total_power_dbm']:.2f} dBm  "
                  f"secrecy L1 {min(m['secrecy_rate_l1']):.3f} bit/s/Hz", file=stream)
        else:
            print(f"{name:<10} {m['status']}", file=stream)
    infeasible = any(metrics[n]["status"] != "solved" for n in cfg.schemes)
    return EXIT_INFEASIBLE if infeasible else EXIT_OK


def cmd_campaign(cfg: RunConfig, threads=1, stream=None):
    stream = stream or sys.stdout
    writer = Writer(cfg.out_dir)
    log_buf = _Lines()
    rows, _ = run_campaign(cfg.sim, cfg.schemes, cfg.sweep, cfg.n_error_samples, cfg.n_tries, threads=threads,
                           solver_cfg=cfg.solver, trial_log=log_buf)
    writer.write("metrics.csv", rows_to_csv(rows))
    writer.write("trials.jsonl", log_buf.text())
    writer.write("config.json", cfg.to_json())
    _print_table(rows, stream)
    return EXIT_OK


class _Lines:
    def __init__(self):
        self.parts = []

    def write(self, s):
        self.parts.append(s)

    def text(self):
        return "".join(self.parts)


def cmd_validate(seed=0, inject_sign_flip=False, stream=None):
    stream = stream or sys.stdout
    from robustbf.validate import run_properties
    results = run_properties(seed, inject_sign_flip)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<36} {r.detail}  ({r.seconds:.1f} s)", file=stream)
    n_ok = sum(r.passed for r in results)
    print(f"{n_ok}/{len(results)} properties passed", file=stream)
    return EXIT_OK if n_ok == len(results) else EXIT_ERROR


def build_parser():
    p = argparse.ArgumentParser(prog="robustbf", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"solve": "solve one realization (config field 'trial') with every scheme",
             "campaign": "run the Monte-Carlo campaign and write metrics.csv"}
    for name in ("solve", "campaign"):
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--config", required=True, metavar="PATH", help="JSON run configuration")
        s.add_argument("--seed", type=int, help="override sim.seed")
        s.add_argument("--trials", type=int, help="override sim.trials")
        s.add_argument("--out", metavar="DIR", help="override out_dir")
        s.add_argument("--threads", type=int, default=1, help="worker processes (campaign only)")
    v = sub.add_parser("validate", help="run the built-in property suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject-sign-flip", action="store_true",
                   help="flip the sign of the beamformer term in the robust eavesdropping LMI")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            return cmd_validate(args.seed, args.inject_sign_flip)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config, {"seed": args.seed, "trials": args.trials, "out_dir": args.out})
        if args.command == "solve":
            return cmd_solve(cfg)
        return cmd_campaign(cfg, args.threads)
    except ConfigError as exc:
        print(f"robustbf: config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # anything else is an internal error, reported not raised
        log.debug("internal error", exc_info=True)
        print(f"robustbf: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
