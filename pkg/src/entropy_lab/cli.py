"""Command-line experiment runner.

Usage::

    entropy-lab concavity --set p=2 --set q=3 --out runs/c23
    entropy-lab sweep --config sweep.cfg --out runs/sweep

Config files hold flat ``key = value`` lines (``#`` starts a comment);
``--set KEY=VALUE`` overrides them.  Exit codes: 0 ok, 2 config error,
3 check failure, 4 numerical abort.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import artifacts
from .checks import (
    CONCAVITY_TOL,
    DILATION_TOL,
    IDENTITY_TOL,
    INEQUALITY_TOL,
    LINEARITY_TOL,
    check_concavity,
    check_dilation_invariance,
    check_key_inequality,
    check_linear_power,
    check_production_identities,
)
from .epi import EPI_TOL, EpiCase, check_epi
from .functionals import entropy_power, entropy_power_from_sm, snapshot
from .grid import DomainError, GridDensity, Orders
from .profiles import barenblatt, box, gaussian, line_nodes, mixture, uniform
from .solver import FlowSpec, NumericalAbort, solve_sm_flow

log = logging.getLogger("entropy_lab")

DEFAULT_IMPLICIT_DT = 1e-3
COMMANDS = ("flow", "concavity", "epi", "sweep", "functionals")
EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_ABORT = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple:
    text = text.strip()
    if ":" in text and "," not in text:
        lo, hi, k = text.split(":")
        return tuple(float(v) for v in np.linspace(float(lo), float(hi), int(k)))
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


SCHEMA = {
    "p": (float, 2.0),
    "q": (float, 3.0),
    "d": (int, 1),
    "n": (int, 2048),
    "L": (float, 10.0),
    "init": (str, "gaussian"),
    "sigma2": (float, 1.0),
    "t0": (float, 1.0),
    "width": (float, 2.0),
    "mixture": (str, "0.5:-1.5:0.5,0.5:1.5:0.5"),
    "t_start": (float, 0.0),
    "t_end": (float, 1.0),
    "scheme": (str, "implicit"),
    "dt": (_opt_float, None),
    "cfl": (float, 0.4),
    "snapshots": (int, 64),
    "snapshot_ratio": (float, 20.0),
    "dump_states": (_ints, ()),
    "lambdas": (_floats, (0.5, 2.0, 5.0)),
    "variant": (str, "sharma-mittal"),
    "alpha": (_opt_float, None),
    "summands": (str, "gaussian:1,uniform:1"),
    "p_values": (_floats, (0.6, 1.2, 1.8, 2.4, 3.0)),
    "q_values": (_floats, (0.5, 1.125, 1.75, 2.375, 3.0)),
    "tol_identity": (float, IDENTITY_TOL),
    "tol_inequality": (float, INEQUALITY_TOL),
    "tol_concavity": (float, CONCAVITY_TOL),
    "tol_dilation": (float, DILATION_TOL),
    "tol_linear": (float, LINEARITY_TOL),
    "tol_epi": (float, EPI_TOL),
    "seed": (int, 0),
}


@dataclass
class ExperimentConfig:
    command: str
    values: dict
    out: Path

    def __getitem__(self, key):
        return self.values[key]

    @property
    def orders(self) -> Orders:
        return Orders(self["p"], self["q"], self["d"])

    def flow_spec(self) -> FlowSpec:
        t_start = self["t_start"]
        if self["init"] == "barenblatt" and t_start == 0.0:
            t_start = self["t0"]
        t_end = self["t_end"] if self["t_end"] > t_start else t_start + self["t_end"]
        dt = self["dt"]
        if dt is None and self["scheme"] == "implicit":
            dt = DEFAULT_IMPLICIT_DT
        return FlowSpec(
            t_end=t_end,
            t_start=t_start,
            dt=dt,
            cfl=self["cfl"],
            scheme=self["scheme"],
            snapshots=self["snapshots"],
            snapshot_ratio=self["snapshot_ratio"],
        )

    def resolved(self) -> dict:
        return {"command": self.command, **{k: self.values[k] for k in sorted(self.values)}}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        raw[key] = (value, f"{source}:{lineno}")
    return raw


def build_config(command: str, config_path=None, sets=(), seed=None, out=None) -> ExperimentConfig:
    """Merge defaults, config file and ``--set`` overrides (later wins) and validate."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    raw = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        raw.update(parse_config_text(path.read_text(), str(path)))
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected KEY=VALUE")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"--set {item!r}: unknown key {key!r}")
        raw[key] = (value, f"--set {key}")
    values = {k: default for k, (_, default) in SCHEMA.items()}
    for key, (text, where) in raw.items():
        conv = SCHEMA[key][0]
        try:
            values[key] = conv(text)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {text!r} ({exc})") from None
    if seed is not None:
        values["seed"] = int(seed)
    if values["init"] not in ("gaussian", "barenblatt", "uniform", "mixture", "random_mixture"):
        raise ConfigError(f"init: unknown initial data {values['init']!r}")
    if values["scheme"] not in ("explicit", "implicit"):
        raise ConfigError(f"scheme: must be 'explicit' or 'implicit', got {values['scheme']!r}")
    cfg = ExperimentConfig(command, values, Path(out) if out else Path("entropy_lab_out") / command)
    try:
        if command != "sweep":
            cfg.orders
        else:
            for p in values["p_values"]:
                for q in values["q_values"]:
                    Orders(p, q, values["d"])
        if command in ("flow", "concavity", "sweep"):
            cfg.flow_spec()
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def initial_density(cfg: ExperimentConfig, p: float | None = None) -> GridDensity:
    kind, d, n, L = cfg["init"], cfg["d"], cfg["n"], cfg["L"]
    if kind == "gaussian":
        return gaussian(cfg["sigma2"], d, L, n)
    if kind == "barenblatt":
        return barenblatt(cfg["p"] if p is None else p, d, cfg["t0"], n=n, L=L)
    if kind in ("uniform", "mixture", "random_mixture") and d != 1:
        raise ConfigError(f"init={kind} is available for d = 1 only")
    if kind == "uniform":
        return box(cfg["width"], L, n)
    if kind == "mixture":
        comps = []
        for part in cfg["mixture"].split(","):
            w, mu, s2 = (float(v) for v in part.split(":"))
            comps.append((w, mu, s2))
        return mixture(comps, L, n)
    rng = np.random.default_rng(cfg["seed"])
    k = 3
    comps = zip(rng.uniform(0.2, 1.0, k), rng.uniform(-L / 4, L / 4, k), rng.uniform(0.2, 1.0, k))
    return mixture(list(comps), L, n)


def _summands(cfg: ExperimentConfig, h: float):
    out = []
    for item in cfg["summands"].split(","):
        kind, _, par = item.partition(":")
        par = float(par) if par else 1.0
        if kind == "gaussian":
            L = 8 * np.sqrt(par)
            m = int(np.ceil(L / h))
            x = (np.arange(2 * m + 1) - m) * h
            out.append(GridDensity(x, np.exp(-(x**2) / (2 * par))))
        elif kind == "uniform":
            m = int(round(par / h))
            out.append(GridDensity(np.arange(m + 1) * h, np.ones(m + 1)))
        else:
            raise ConfigError(f"summands: unknown kind {kind!r}")
    return out


class Run:
    """Collects artifacts and check verdicts for the manifest."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.checks = []
        self.files = []
        cfg.out.mkdir(parents=True, exist_ok=True)

    def add_report(self, report, name: str):
        path = artifacts.write_report(report, self.cfg.out / f"{name}.json")
        self.checks.append({"check_id": report.check_id, "pass": report.passed, "file": path.name})

    def add_file(self, path: Path):
        self.files.append(str(path.relative_to(self.cfg.out)))

    def finish(self, status: str = "ok", message: str | None = None) -> int:
        failed = [c for c in self.checks if not c["pass"]]
        if status == "ok" and failed:
            status = "check-failure"
        manifest = {
            "command": self.cfg.command,
            "config": self.cfg.resolved(),
            "status": status,
            "message": message,
            "checks": self.checks,
            "artifacts": sorted(self.files),
        }
        artifacts.write_json(manifest, self.cfg.out / "manifest.json")
        return {"ok": EXIT_OK, "check-failure": EXIT_CHECK, "numerical-abort": EXIT_ABORT}[status]


def _flow(cfg: ExperimentConfig, run: Run):
    traj = solve_sm_flow(initial_density(cfg), cfg.orders, cfg.flow_spec())
    run.add_file(artifacts.write_trajectory(traj, cfg.out / "trajectory.csv"))
    for i in cfg["dump_states"]:
        if not -len(traj.states) <= i < len(traj.states):
            raise ConfigError(f"dump_states: index {i} outside 0..{len(traj.states) - 1}")
        run.add_file(artifacts.write_state(traj, i, cfg.out / "states" / f"state_{i % len(traj.states):04d}.csv"))
    return traj


def concavity_reports(traj, cfg: ExperimentConfig):
    o = traj.orders
    reports = [("concavity", check_concavity(traj, o, tol=cfg["tol_concavity"]))]
    if o.p > 1 - 1 / o.d and o.p > 0.5:
        reports.append(("key_inequality", check_key_inequality(traj, o, tol=cfg["tol_inequality"])))
    if o.p > 0.5:
        prod_e, prod_i = check_production_identities(traj, o, tol=cfg["tol_identity"])
        reports += [("production_E", prod_e), ("production_I", prod_i)]
    if traj.kind == "heat":
        reports.append(("linear_heat", check_linear_power(traj, tol=cfg["tol_linear"])))
    return reports


def cmd_flow(cfg: ExperimentConfig, run: Run):
    _flow(cfg, run)


def cmd_concavity(cfg: ExperimentConfig, run: Run):
    traj = _flow(cfg, run)
    for name, rep in concavity_reports(traj, cfg):
        run.add_report(rep, name)


def cmd_functionals(cfg: ExperimentConfig, run: Run):
    u = initial_density(cfg)
    o = cfg.orders
    snap = snapshot(u, o).as_dict()
    snap["N_pq_from_sm"] = entropy_power_from_sm(u, o)
    snap["N_pq_consistency"] = abs(snap["N_pq_from_sm"] / entropy_power(u, o) - 1)
    run.add_file(artifacts.write_json(snap, cfg.out / "functionals.json"))
    if o.p > 0.5:
        run.add_report(check_dilation_invariance(u, o, cfg["lambdas"], tol=cfg["tol_dilation"]), "dilation")


def cmd_epi(cfg: ExperimentConfig, run: Run):
    h = 2 * cfg["L"] / (cfg["n"] - 1)
    summands = _summands(cfg, h)
    p = cfg["p"]
    alpha = cfg["alpha"] if cfg["alpha"] is not None else (p + 1) / 2
    variant = cfg["variant"]
    try:
        case = EpiCase(tuple(summands), p=p, alpha=alpha, variant=variant, exploratory=False)
    except DomainError as exc:
        if variant == "bobkov-chistyakov" and len(summands) == 2:
            case = EpiCase(tuple(summands), p=p, alpha=alpha, variant=variant, exploratory=True)
        else:
            raise ConfigError(str(exc)) from None
    run.add_report(check_epi(case, tol=cfg["tol_epi"]), "epi_" + variant)


SWEEP_COLUMNS = (
    "p",
    "q",
    "regime",
    "concavity_pass",
    "max_second_difference",
    "ccc_pass",
    "key_margin_min",
    "prodE_residual",
    "prodI_residual",
    "error",
)


def sweep_row(cfg: ExperimentConfig, p: float, q: float) -> list:
    """One (p, q) pipeline; failures are recorded in the row, not raised."""
    o = None
    try:
        o = Orders(p, q, cfg["d"])
        traj = solve_sm_flow(initial_density(cfg, p), o, cfg.flow_spec(), keep_states=False)
        reps = dict(concavity_reports(traj, cfg))
        c = reps["concavity"]
        k = reps.get("key_inequality")
        pe, pi = reps.get("production_E"), reps.get("production_I")
        return [
            p,
            q,
            o.regime(),
            c.passed,
            c.max_rel_residual,
            c.extra["ccc_pass"],
            k.margin_min if k else None,
            pe.max_rel_residual if pe else None,
            pi.max_rel_residual if pi else None,
            "",
        ]
    except (NumericalAbort, DomainError, ValueError) as exc:
        return [p, q, o.regime() if o else "", False, None, False, None, None, None, f"{type(exc).__name__}: {exc}"]


def sweep(cfg: ExperimentConfig, pairs=None, workers: int | None = None) -> list:
    """Run every (p, q) pair concurrently; rows come back in input order."""
    if pairs is None:
        pairs = [(p, q) for p in cfg["p_values"] for q in cfg["q_values"]]
    if workers is None:
        workers = int(os.environ.get("ENTROPY_LAB_THREADS", os.cpu_count() or 1))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda pq: sweep_row(cfg, *pq), pairs))


def cmd_sweep(cfg: ExperimentConfig, run: Run):
    rows = sweep(cfg)
    run.add_file(artifacts.write_csv(cfg.out / "sweep.csv", SWEEP_COLUMNS, rows))
    for row in rows:
        tag = f"p={row[0]!r},q={row[1]!r}"
        ok = bool(row[3]) and not row[9]
        run.checks.append({"check_id": f"ConcavityN[{tag}]", "pass": ok, "file": "sweep.csv"})


HANDLERS = {
    "flow": cmd_flow,
    "concavity": cmd_concavity,
    "epi": cmd_epi,
    "sweep": cmd_sweep,
    "functionals": cmd_functionals,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute one configured command; returns the process exit code."""
    rec = Run(cfg)
    try:
        HANDLERS[cfg.command](cfg, rec)
    except NumericalAbort as exc:
        log.error("numerical abort: %s", exc)
        return rec.finish("numerical-abort", str(exc))
    code = rec.finish()
    for c in rec.checks:
        log.info("%-28s %s", c["check_id"], "pass" if c["pass"] else "FAIL")
    return code


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="entropy-lab", description="Sharma-Mittal entropy power experiments")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH", help="flat key = value config file")
    ap.add_argument("--out", metavar="DIR", help="output directory")
    ap.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="sets")
    ap.add_argument("--seed", type=int, metavar="N")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    try:
        cfg = build_config(args.command, args.config, args.sets, args.seed, args.out)
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
