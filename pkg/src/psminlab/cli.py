"""Command-line front end.

Configuration is a flat ``key = value`` file (``--config``) overridden by
command-line flags. Every command writes into ``--out``:

  report.txt   key = value block (version, config echo, results, provenance)
  report.json  the same block as JSON
  *.csv        tables (schemas listed in each subcommand's --help)
  *.svg        plots with the plotted data embedded in an XML comment
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import reporting as rep
from .domains import DomainSpec, corner_angles, domain_from_mapping
from .thresholds import Constants

COMMANDS = ("gns", "threshold", "solve", "opt1d", "triangle", "scaling", "sweep",
            "report", "reproduce")
DOMAIN_KEYS = ("kind", "b", "dim", "vertices", "radius")


@dataclass
class RunConfig:
    command: str
    domain: dict = field(default_factory=lambda: {"kind": "hypercube", "dim": "2"})
    dim: int = 2
    p: Optional[float] = None
    n: Optional[int] = None
    seed: int = 0
    tol: float = 1e-8
    max_iter: int = 2000
    estimate: Optional[float] = None
    dmax: int = 64
    lambda_from: float = 2.0
    lambda_to: float = 16.0
    lambda_count: int = 8
    param: str = "b"
    start: float = 1.0
    stop: float = 4.0
    step: float = 0.25
    full: bool = False
    quick: bool = False
    g2: float = 5.8545
    g2_source: str = "literature"
    input: Optional[str] = None
    out: str = "psminlab-out"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.n is not None and self.n < 4:
            raise ValueError("n must be >= 4")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.tol <= 1e-4:
            raise ValueError("tol must lie in (0, 1e-4]")
        if self.p is not None and self.p < 0:
            raise ValueError("p must be non-negative")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (self.lambda_from < self.lambda_to and self.lambda_count >= 2):
            raise ValueError("need lambda_from < lambda_to and lambda_count >= 2")
        if not (self.step > 0 and self.start <= self.stop):
            raise ValueError("need step > 0 and from <= to")
        if self.param != "b":
            raise ValueError("only the rectangle aspect 'b' can be swept")
        if not self.g2 > 0:
            raise ValueError("g2 must be positive")

    def domain_spec(self) -> DomainSpec:
        return domain_from_mapping(self.domain)

    def constants(self) -> Constants:
        return Constants().with_value(2, self.g2, self.g2_source)

    def echo(self) -> dict:
        d = asdict(self)
        dom = d.pop("domain")
        return {**{f"config.{k}": v for k, v in d.items() if v is not None},
                **{f"config.domain.{k}": v for k, v in dom.items()}}


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value: str):
    t = str(_FIELD_TYPES[key])
    if "bool" in t:
        low = str(value).strip().lower()
        if low not in ("1", "0", "true", "false", "yes", "no"):
            raise ValueError(f"{key}: expected a boolean, got {value!r}")
        return low in ("1", "true", "yes")
    if "int" in t:
        return int(value)
    if "float" in t:
        return float(value)
    return str(value)


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are rejected."""
    kv = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.replace("-", "_")
        if k.startswith("domain."):
            k = k[len("domain."):]
            if k not in DOMAIN_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown domain key {k!r}")
            kv.setdefault("domain", {})[k] = v
        elif k in _FIELD_TYPES and k not in ("command", "domain"):
            kv[k] = v
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {k!r}")
    return kv


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values = read_config_file(args.config)
    domain = dict(values.pop("domain", {}))
    for k in DOMAIN_KEYS:
        flag = getattr(args, f"domain_{k}" if k != "kind" else "domain", None)
        if flag is not None:
            domain[k] = str(flag)
    for name in _FIELD_TYPES:
        if name in ("command", "domain"):
            continue
        v = getattr(args, name, None)
        if v is not None and v is not False:
            values[name] = v
    cfg_kw = {k: _coerce(k, v) if isinstance(v, str) else v for k, v in values.items()}
    cfg = RunConfig(command=args.command, **cfg_kw)
    if "dim" in values and not domain:
        domain = {"kind": "hypercube"}
    if domain:
        domain.setdefault("kind", "hypercube")
        if domain["kind"] in ("hypercube", "cube", "ball") and "dim" not in domain:
            domain["dim"] = str(cfg.dim)
        cfg.domain = domain
    if "g2" in values:
        cfg.g2_source = "override"
    cfg.validate()
    return cfg


def worker_count() -> int:
    env = os.environ.get("PSMINLAB_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("PSMINLAB_THREADS must be >= 1")
        return n
    return max(1, min(8, os.cpu_count() or 1))


# -- commands -----------------------------------------------------------------

def cmd_gns(cfg: RunConfig, art: rep.Artifacts) -> dict:
    from . import radial_gns as rg

    prof = rg.solve_ground_state(cfg.dim, cfg.tol)
    m = rg.ground_state_moments(prof)
    G = rg.compute_G(prof)
    res = rg.virial_residuals(m, cfg.dim)
    out = {"dim": cfg.dim, "f0": prof.f0, "G": G, "virial_residual_grad": res[0],
           "virial_residual_l2": res[1], "r_max": prof.r_max, "decay_rate": prof.decay_rate,
           "l2": m.l2, "grad2": m.grad2, "lp": m.lp}
    if cfg.dim >= 2:
        out["curvature_coefficient"] = rg.curvature_coefficient(m, cfg.dim)
        out["angular_constant"] = rg.angular_constant(cfg.dim)
    art.csv("profile.csv", ["r", "f", "df"], zip(prof.r, prof.f, prof.df))
    return out


def cmd_threshold(cfg: RunConfig, art: rep.Artifacts) -> dict:
    from . import thresholds as th

    spec = cfg.domain_spec()
    consts = cfg.constants()
    out: dict = {"domain": spec.kind, "dim": spec.dim}
    if spec.dim >= 2 and (spec.dim in consts.values):
        thr, formula, source = th.domain_threshold(spec, consts)
        out.update(threshold=thr, formula=formula, g_source=source)
        if spec.dim == 2 and spec.kind != "ball":
            out["min_angle"] = min([math.pi, *corner_angles(spec)])
    elif spec.kind == "hypercube" and spec.dim >= 3:
        out.update(threshold=th.sobolev_lower_bound(spec.dim) / 4.0, formula="sobolev",
                   g_source="sobolev floor S_d")
    if spec.kind == "hypercube":
        out["T"] = th.hypercube_test_value(spec.dim)
    if cfg.estimate is not None:
        if "threshold" in out:
            v = th.verdict(spec, cfg.estimate, consts, out["threshold"], out["formula"])
        else:
            v = th.verdict(spec, cfg.estimate, consts)
        out.update(estimate=v.estimate, verdict=v.verdict, margin=v.margin)
    rows = th.sweep_table(range(1, cfg.dmax + 1))
    keys = ["dim", "T", "S", "S_over_4", "smooth_floor"]
    data = art.csv("dimension_table.csv", keys, ([r[k] for k in keys] for r in rows))
    art.svg("dimension_table.svg", rep.plot_dimension_table(rows), data)
    return out


def _solve_report(cfg, spec, art, prefix="") -> tuple[dict, object]:
    from .quotient_solver import concentration_diagnostics, minimize

    p = cfg.p if cfg.p is not None else 2.0 / spec.dim
    r = minimize(spec, p, cfg.n or 32, seed=cfg.seed, max_iter=cfg.max_iter)
    radius, bdist = concentration_diagnostics(r)
    out = {f"{prefix}{k}": v for k, v in r.summary().items()}
    out.update({"monotone": bool(np.all(np.diff(r.history) <= 0)),
                "argmax_mass_radius": radius, "argmax_boundary_distance": bdist,
                "nodes": r.field.mesh.size})
    return out, r


def cmd_solve(cfg: RunConfig, art: rep.Artifacts) -> dict:
    from . import thresholds as th

    spec = cfg.domain_spec()
    out, r = _solve_report(cfg, spec, art)
    thr = None
    if spec.dim >= 2 and spec.dim in cfg.constants().values and math.isclose(r.p, 2.0 / spec.dim):
        v = th.verdict(spec, r.quotient, cfg.constants())
        thr = v.threshold
        out.update(threshold=v.threshold, formula=v.formula, verdict=v.verdict,
                   g_source=v.g_source)
    data = art.csv("history.csv", ["iteration", "quotient"], enumerate(r.history))
    r.field.to_csv(art._path("field.csv"))
    art.svg("history.svg", rep.plot_history(r.history, thr), data)
    return out


def cmd_opt1d(cfg: RunConfig, art: rep.Artifacts) -> dict:
    from . import variational_1d as v1

    n = cfg.n or 512
    prof, val, r = v1.optimize_1d(n, cfg.seed, cfg.max_iter, antisymmetric=not cfg.full)
    cos = v1.Profile1D.from_function(lambda x: np.cos(np.pi * x), n)
    out = {"n": n, "class": "zero-average" if cfg.full else "anti-symmetric",
           "value": val, "value_piecewise_linear": v1.quotient_1d_linear(prof),
           "cosine_value": v1.quotient_1d(cos), "iterations": r.iterations,
           "converged": r.converged}
    art.csv("profile.csv", ["x", "phi"], zip(prof.x, prof.values))
    data = art.csv("history.csv", ["iteration", "quotient"], enumerate(r.history))
    art.svg("history.svg", rep.plot_history(r.history), data)
    return out


def cmd_triangle(cfg: RunConfig, art: rep.Artifacts) -> dict:
    from .domains import build_mesh, right_isosceles_triangle
    from .quotient_solver import GridField, descend, smooth_random_field
    from . import thresholds as th
    from . import triangle_symmetry as ts

    spec = right_isosceles_triangle()
    mesh = build_mesh(spec, cfg.n or 32)
    p = cfg.p if cfg.p is not None else 1.0
    trace = []

    def record(it, u, Q):
        s = ts.split(GridField(mesh, u))
        trace.append((it, Q, s.alpha, s.beta, s.gamma, s.zeta, ts.stationarity_gap(s)))

    u0 = smooth_random_field(mesh, cfg.seed)
    record(0, u0, float("nan"))
    r = descend(mesh, u0, p, cfg.max_iter, callback=record)
    trace[0] = (0, r.history[0], *trace[0][2:])
    s = ts.split(r.field)
    ids = ts.split_identities(s)
    out = {"p": p, "nodes": mesh.size, "quotient": r.quotient, "converged": r.converged,
           "iterations": r.iterations, **s.as_dict(),
           "stationarity_gap": ts.stationarity_gap(s),
           **{f"identity.{k}": v for k, v in ids.items()},
           "region": list(ts.region_membership(min(max(s.alpha, 0), 1),
                                               min(max(s.beta, 0), 1)))}
    if math.isclose(p, 1.0):
        consts = cfg.constants()
        out.update(threshold=th.corner_threshold(corner_angles(spec), consts.G(2)),
                   g_source=consts.source(2))
    art.csv("symmetry_trace.csv",
            ["iteration", "quotient", "alpha", "beta", "gamma", "zeta", "gap"], trace)
    data = art.csv("history.csv", ["iteration", "quotient"], enumerate(r.history))
    art.svg("history.svg", rep.plot_history(r.history, out.get("threshold")), data)
    return out


def cmd_scaling(cfg: RunConfig, art: rep.Artifacts) -> dict:
    from . import scaling_lab as sl

    p = cfg.p if cfg.p is not None else 2.0
    lams = sl.geometric_lambdas(cfg.lambda_from, cfg.lambda_to, cfg.lambda_count)
    run = sl.scaling_sweep(p, cfg.dim, lams, n=cfg.n)
    out = {"p": p, "dim": cfg.dim, "n": run.n, "fitted_exponent": run.fitted_exponent,
           "expected_exponent": run.expected_exponent,
           "exponent_error": abs(run.fitted_exponent - run.expected_exponent)}
    data = art.csv("scaling.csv", ["lambda", "quotient"], run.rows())
    art.svg("scaling.svg", rep.plot_scaling(run.lambdas, run.quotients, run.fitted_exponent), data)
    return out


def _sweep_point(args):
    b, p, n, seed, max_iter = args
    from .domains import rectangle
    from .quotient_solver import minimize

    r = minimize(rectangle(b), p, n, seed=seed, max_iter=max_iter)
    return b, r.quotient, r.converged, r.iterations


def cmd_sweep(cfg: RunConfig, art: rep.Artifacts) -> dict:
    count = int(math.floor((cfg.stop - cfg.start) / cfg.step + 1e-9)) + 1
    params = [round(cfg.start + k * cfg.step, 12) for k in range(count)]
    p = cfg.p if cfg.p is not None else 1.0
    jobs = [(b, p, cfg.n or 32, cfg.seed, cfg.max_iter) for b in params]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = sorted(pool.map(_sweep_point, jobs))
    level = cfg.g2 / 4.0
    crossing = math.nan
    for (b0, q0, *_), (b1, q1, *_) in zip(results, results[1:]):
        if q0 >= level > q1:
            crossing = b0 + (q0 - level) * (b1 - b0) / (q0 - q1)
            break
    data = art.csv("sweep.csv", ["b", "quotient", "converged", "iterations"], results)
    art.svg("sweep.svg", rep.plot_sweep([r[0] for r in results], [r[1] for r in results],
                                        level, "b"), data)
    return {"param": "b", "p": p, "points": len(results), "level": level,
            "g_source": cfg.g2_source, "crossing": crossing}


def cmd_report(cfg: RunConfig, art: rep.Artifacts) -> dict:
    import json

    root = Path(cfg.input or cfg.out)
    found = sorted(root.glob("**/report.json"))
    rows = []
    for path in found:
        doc = json.loads(path.read_text())
        rows.append((str(path.parent.relative_to(root)) or ".", doc.get("command", "?"),
                     doc.get("status", "?")))
    art.csv("summary.csv", ["run", "command", "status"], rows)
    return {"input": str(root), "runs": len(rows)}


def cmd_reproduce(cfg: RunConfig, art: rep.Artifacts) -> dict:
    from .reproduce import run_checks

    checks = run_checks(quick=cfg.quick, g2=cfg.g2)
    rows = [(c.name, c.computed, c.expected, c.tol, c.source, c.passed) for c in checks]
    art.csv("checks.csv", ["check", "computed", "expected", "tolerance", "source", "pass"], rows)
    for c in checks:
        print(c.line())
    failed = [c.name for c in checks if not c.passed and c.source == "PAPER"]
    return {"checks": len(checks), "passed": sum(c.passed for c in checks),
            "failed_published_checks": failed, "quick": cfg.quick}


HANDLERS = {"gns": cmd_gns, "threshold": cmd_threshold, "solve": cmd_solve,
            "opt1d": cmd_opt1d, "triangle": cmd_triangle, "scaling": cmd_scaling,
            "sweep": cmd_sweep, "report": cmd_report, "reproduce": cmd_reproduce}

CSV_SCHEMAS = {
    "gns": "profile.csv: r,f,df (radial ground state on a uniform grid)",
    "threshold": "dimension_table.csv: dim,T,S,S_over_4,smooth_floor",
    "solve": "history.csv: iteration,quotient; field.csv: x1..xd,u",
    "opt1d": "profile.csv: x,phi; history.csv: iteration,quotient",
    "triangle": "symmetry_trace.csv: iteration,quotient,alpha,beta,gamma,zeta,gap",
    "scaling": "scaling.csv: lambda,quotient",
    "sweep": "sweep.csv: b,quotient,converged,iterations (sorted by b)",
    "report": "summary.csv: run,command,status",
    "reproduce": "checks.csv: check,computed,expected,tolerance,source,pass",
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psminlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"psminlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=CSV_SCHEMAS[name].split(":")[0],
                            description=f"CSV schema: {CSV_SCHEMAS[name]}")
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--domain", help="triangle | square | rectangle | hypercube | polygon")
        sp.add_argument("--b", dest="domain_b", type=float, help="rectangle aspect ratio")
        sp.add_argument("--vertices", dest="domain_vertices", help='polygon, "x y; x y; ..."')
        sp.add_argument("--dim", type=int)
        sp.add_argument("--p", type=float)
        sp.add_argument("--n", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--max-iter", dest="max_iter", type=int)
        sp.add_argument("--estimate", type=float, help="upper bound to compare with the threshold")
        sp.add_argument("--dmax", type=int)
        sp.add_argument("--lambda-from", dest="lambda_from", type=float)
        sp.add_argument("--lambda-to", dest="lambda_to", type=float)
        sp.add_argument("--lambda-count", dest="lambda_count", type=int)
        sp.add_argument("--param")
        sp.add_argument("--from", dest="start", type=float)
        sp.add_argument("--to", dest="stop", type=float)
        sp.add_argument("--step", type=float)
        sp.add_argument("--full", action="store_true", help="opt1d: whole zero-average class")
        sp.add_argument("--quick", action="store_true", help="reproduce: reduced grids")
        sp.add_argument("--g2", type=float, help="override the G(2) constant")
        sp.add_argument("--input", help="report: directory holding earlier runs")
    return ap


def run(cfg: RunConfig) -> int:
    with rep.staged_output(cfg.out) as art:
        results = HANDLERS[cfg.command](cfg, art)
        status = "ok"
        if cfg.command == "reproduce" and results["failed_published_checks"]:
            status = "failed"
        block = {"version": __version__, "command": cfg.command, "status": status,
                 **cfg.echo(), **results}
        text = rep.report_block(block)
        art.text("report.txt", text)
        art.json("report.json", block)
    sys.stdout.write(text)
    return 0 if status == "ok" else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.domain is None and args.domain_b is not None:
            args.domain = "rectangle"
        if args.domain is None and args.domain_vertices is not None:
            args.domain = "polygon"
        cfg = build_config(args)
        return run(cfg)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        msg = str(exc).splitlines()[0] if str(exc) else ""
        print(f"psminlab {args.command}: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
