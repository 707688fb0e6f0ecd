"""Experiment runner: subcommands, config files, JSON reports, exit codes.

Exit status: 0 success, 2 precondition violation, 3 numerical-residual breach,
4 cap breach.  Reports are JSON with sorted keys; every error also lands in
the report.  The only environment override honored is HARNACK_LAB_OUT_DIR for
the default output directory.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import os
import sys
import time
from dataclasses import dataclass

from . import conductance, coupling, generators, graph, harnack, verify
from ._version import version_string
from .errors import (CapExceededError, HarnackLabError, PreconditionError,
                     ResidualError)

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_RESIDUAL = 3
EXIT_CAP = 4

_CONFIG_KEYS = ("op", "graph", "center", "R", "K", "D", "trials", "seed",
                "out", "cap", "eps", "workers", "scale")


@dataclass
class ExperimentConfig:
    """Declarative description of one run; validated before any compute."""

    op: str
    graph: str | None = None
    center: str | None = None
    R: int | None = None
    K: float | None = None
    D: str | None = None
    trials: int | None = None
    seed: int = verify.DEFAULT_SEED
    out: str | None = None
    cap: int | None = None
    eps: float | None = None
    workers: int = 1
    scale: float = 1.0

    def to_text(self) -> str:
        cp = configparser.ConfigParser()
        cp["experiment"] = {}
        for key in _CONFIG_KEYS:
            val = getattr(self, key)
            if val is not None:
                cp["experiment"][key] = str(val)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        if list(cp.sections()) != ["experiment"]:
            raise PreconditionError("config must contain exactly one [experiment] section")
        section = cp["experiment"]
        unknown = set(section) - set(_CONFIG_KEYS)
        if unknown:
            raise PreconditionError(f"unknown config keys: {sorted(unknown)}")
        if "op" not in section:
            raise PreconditionError("config needs an 'op' key")
        kwargs: dict = {"op": section["op"]}
        for key, conv in (("graph", str), ("center", str), ("R", int), ("K", float),
                          ("D", str), ("trials", int), ("seed", int), ("out", str),
                          ("cap", int), ("eps", float), ("workers", int), ("scale", float)):
            if key in section:
                kwargs[key] = conv(section[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


# -- graph sources -------------------------------------------------------------

def resolve_graph(spec: str) -> tuple[graph.WeightedGraph, int | None]:
    """Parse a generator spec or load a TSV file.

    Specs: ``lattice:d,half_width`` | ``three-rail:n_max`` |
    ``lamplighter:r_max`` | a file path.
    """
    if spec is None:
        raise PreconditionError("an operation needing a graph got none (--graph)")
    if ":" in spec and not os.path.exists(spec):
        kind, _, args = spec.partition(":")
        try:
            nums = [int(a) for a in args.split(",") if a != ""]
        except ValueError:
            raise PreconditionError(f"bad generator arguments in {spec!r}") from None
        if kind == "lattice" and len(nums) == 2:
            return generators.lattice_box(*nums), None
        if kind == "three-rail" and len(nums) == 1:
            return generators.three_rail(nums[0]), None
        if kind == "lamplighter" and len(nums) == 1:
            return generators.lamplighter_ball(nums[0])
        raise PreconditionError(f"unknown generator spec {spec!r}")
    if not os.path.exists(spec):
        raise PreconditionError(f"graph file {spec!r} does not exist")
    return graph.load_graph_tsv(spec), None


def resolve_center(g: graph.WeightedGraph, center: str | None, default: int | None) -> int:
    if center is None:
        if default is not None:
            return default
        fam = g.meta.get("family")
        if fam == "lattice_box":
            return g.index(tuple([0] * g.meta["d"]))
        if fam == "three_rail":
            return g.index((0, 0))
        raise PreconditionError("--center is required for this graph")
    if center.startswith("#"):
        return g.check_vertex(int(center[1:]))
    for lab in g.labels:
        if graph.label_str(lab) == center:
            return g.index(lab)
    raise PreconditionError(f"no vertex labeled {center!r}")


def resolve_domain(g: graph.WeightedGraph, spec: str | None, x0: int, radius: int) -> graph.VertexSet:
    """Domain spec: ``ball:2R`` (default), ``ball:4R``, or ``ball:<int>``."""
    if spec is None or spec == "ball:2R":
        return graph.ball(g, x0, 2 * radius)
    if spec == "ball:4R":
        return graph.ball(g, x0, 4 * radius)
    if spec.startswith("ball:"):
        return graph.ball(g, x0, int(spec.split(":", 1)[1]))
    raise PreconditionError(f"unknown domain spec {spec!r}")


# -- operations -----------------------------------------------------------------

def _require(cfg: ExperimentConfig, *keys: str) -> None:
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise PreconditionError(f"operation {cfg.op!r} needs {missing}")


def run(cfg: ExperimentConfig) -> tuple[int, dict]:
    """Execute one experiment; returns (exit_status, report)."""
    t0 = time.perf_counter()
    report: dict = {
        "version": version_string(),
        "op": cfg.op,
        "params": {k: getattr(cfg, k) for k in _CONFIG_KEYS if getattr(cfg, k) is not None},
    }
    status = EXIT_OK
    try:
        report["result"] = _dispatch(cfg, report)
    except (PreconditionError,) as e:
        report["error"] = str(e)
        status = EXIT_PRECONDITION
    except ResidualError as e:
        report["error"] = str(e)
        status = EXIT_RESIDUAL
    except CapExceededError as e:
        report["error"] = str(e)
        status = EXIT_CAP
    report["elapsed_s"] = round(time.perf_counter() - t0, 3)
    report["exit_status"] = status
    _write_report(cfg, report)
    return status, report


def _dispatch(cfg: ExperimentConfig, report: dict):
    op = cfg.op
    if op == "gen":
        return _op_gen(cfg)
    if op in ("ehi", "hg", "annulus", "oi", "thm1"):
        _require(cfg, "graph", "R")
        g, default_center = resolve_graph(cfg.graph)
        x0 = resolve_center(g, cfg.center, default_center)
        if op == "ehi":
            return harnack.ehi_constant(g, x0, cfg.R).to_jsonable(g)
        if op == "hg":
            dom = resolve_domain(g, cfg.D, x0, cfg.R)
            return harnack.hg_constant(g, x0, cfg.R, dom).to_jsonable(g)
        if op == "annulus":
            dom = resolve_domain(g, cfg.D, x0, cfg.R)
            return harnack.annulus_ratio(g, x0, cfg.R, dom).to_jsonable(g)
        if op == "oi":
            _require(cfg, "K")
            return harnack.oi_rho(g, x0, cfg.R, cfg.K).to_jsonable(g)
        rep = harnack.theorem1_check(g, x0, cfg.R)
        rep["center"] = graph.label_str(g.labels[rep["center"]])
        return rep
    if op == "db":
        _require(cfg, "graph", "R")
        g, default_center = resolve_graph(cfg.graph)
        x0 = resolve_center(g, cfg.center, default_center)
        rep = conductance.dumbbell_ratio(g, x0, cfg.R,
                                         cap=cfg.cap or conductance.PAIR_CAP_DEFAULT)
        rep["center"] = graph.label_str(g.labels[rep["center"]])
        rep["conductances"] = [
            [graph.label_str(g.labels[x]), graph.label_str(g.labels[y]), c]
            for x, y, c in rep["conductances"]]
        rep["max_pair"] = [graph.label_str(g.labels[v]) for v in rep["max_pair"]]
        rep["min_pair"] = [graph.label_str(g.labels[v]) for v in rep["min_pair"]]
        return rep
    if op == "couple":
        _require(cfg, "R", "K", "trials")
        return coupling.uc_estimate(cfg.R, cfg.K, cfg.trials, seed=cfg.seed,
                                    eps=cfg.eps if cfg.eps is not None else 0.1,
                                    workers=cfg.workers,
                                    step_cap=cfg.cap or coupling.DEFAULT_STEP_CAP)
    if op == "osc-fail":
        _require(cfg, "R", "K", "trials")
        return coupling.osc_failure_experiment(
            cfg.R, cfg.K, cfg.trials, seed=cfg.seed, workers=cfg.workers,
            step_cap=cfg.cap or coupling.DEFAULT_STEP_CAP)
    if op == "verify":
        return verify.verify_suite(seed=cfg.seed, workers=cfg.workers,
                                   scale=cfg.scale, echo=lambda *a: None)
    raise PreconditionError(f"unknown operation {op!r}")


def _op_gen(cfg: ExperimentConfig) -> dict:
    _require(cfg, "graph", "out")
    g, base = resolve_graph(cfg.graph)
    graph.save_graph_tsv(g, cfg.out)
    sidecar = cfg.out + ".labels.json"
    labels = {str(i): graph.label_str(lab) for i, lab in enumerate(g.labels)}
    payload = {
        "family": g.meta.get("family"),
        "meta": {k: v for k, v in g.meta.items()},
        "labels": labels,
        "halo": sorted(g.halo),
    }
    if base is not None:
        payload["base_vertex"] = base
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, ensure_ascii=False, indent=1)
        fh.write("\n")
    return {"vertices": g.n, "edges": sum(1 for _ in g.edges()),
            "tsv": cfg.out, "sidecar": sidecar}


def _write_report(cfg: ExperimentConfig, report: dict) -> None:
    out_dir = os.environ.get("HARNACK_LAB_OUT_DIR")
    path = None
    if cfg.op == "gen":
        if out_dir and cfg.out:
            path = os.path.join(out_dir, os.path.basename(cfg.out) + ".report.json")
        elif cfg.out:
            path = cfg.out + ".report.json"
    elif cfg.out:
        path = os.path.join(out_dir, cfg.out) if out_dir else cfg.out
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report, sort_keys=True, ensure_ascii=False, indent=1))
            fh.write("\n")


# -- argument parsing -----------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="generator spec (lattice:d,hw | three-rail:n | "
                                   "lamplighter:r) or TSV path")
    p.add_argument("--center", help="vertex label (e.g. '0,0') or '#index'")
    p.add_argument("--R", type=int)
    p.add_argument("--K", type=float)
    p.add_argument("--D", help="domain spec: ball:2R (default) | ball:4R | ball:<r>")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=verify.DEFAULT_SEED)
    p.add_argument("--out", help="output path for the JSON report (or TSV for gen)")
    p.add_argument("--cap", type=int, help="step/pair cap override")
    p.add_argument("--eps", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--scale", type=float, default=1.0,
                   help="trial-count scale for verify")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="harnack-lab",
                                 description="Potential theory and coupled walks "
                                             "on finite weighted graphs")
    ap.add_argument("--version", action="version", version=version_string())
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("gen", "ehi", "hg", "annulus", "oi", "thm1", "db",
                 "couple", "osc-fail", "verify"):
        _add_common(sub.add_parser(name))
    runp = sub.add_parser("run", help="run an experiment from a config file")
    runp.add_argument("--config", required=True)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            cfg = ExperimentConfig.from_file(args.config)
        except HarnackLabError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_PRECONDITION
    else:
        cfg = ExperimentConfig(
            op=args.command, graph=args.graph, center=args.center, R=args.R,
            K=args.K, D=args.D, trials=args.trials, seed=args.seed, out=args.out,
            cap=args.cap, eps=args.eps, workers=args.workers, scale=args.scale)
    if cfg.op == "verify":
        summary = verify.verify_suite(seed=cfg.seed, workers=cfg.workers,
                                      scale=cfg.scale)
        payload = verify.summary_bytes(summary)
        if cfg.out:
            with open(cfg.out, "wb") as fh:
                fh.write(payload)
        else:
            sys.stdout.write(payload.decode("utf-8"))
        return EXIT_OK if summary["all_passed"] else 1
    status, report = run(cfg)
    if not cfg.out:
        print(json.dumps(report, sort_keys=True, ensure_ascii=False, indent=1))
    if "error" in report:
        print(f"error: {report['error']}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
