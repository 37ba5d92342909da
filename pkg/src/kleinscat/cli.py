"""Command-line front end.

Every subcommand reads one JSON config (``--config``), writes its results to
``--out`` and stamps each output with the SHA-256 of the resolved config.
Floats are printed with 17 significant digits.  Exit codes: 0 success,
1 partial failure (some sweep rows failed), 2 config or validation error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, bounds, limitset, probes, qc, scattering
from .errors import ConfigError, KleinscatError
from .kleinian import SchottkyGroup
from .moebius import classify

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


# --- config ------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    raw: dict
    base: Path
    out: Path
    seed: int = 0
    threads: int = 1
    groups: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def resolved(self) -> dict:
        d = dict(self.raw)
        for key in ("group", "group2"):
            if key in d:
                d[key] = self._group_json(key)
        d["seed"] = self.seed
        return d

    def _group_json(self, key):
        ref = self.raw[key]
        if isinstance(ref, str):
            path = (self.base / ref) if not Path(ref).is_absolute() else Path(ref)
            if not path.exists():
                raise ConfigError(f"group file {path} does not exist")
            try:
                return json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        if isinstance(ref, dict):
            return ref
        raise ConfigError(f"'{key}' must be a path or an inline group definition")

    def group(self, key="group") -> SchottkyGroup:
        if key not in self.groups:
            if key not in self.raw:
                raise ConfigError(f"config has no '{key}' entry")
            self.groups[key] = SchottkyGroup.from_dict(self._group_json(key))
        return self.groups[key]

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def spectral(self):
        s = self.raw.get("s", scattering.DEFAULT_S)
        if isinstance(s, (list, tuple)):
            s = complex(s[0], s[1])
        return scattering.SpectralParam(s)


def load_config(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError("--config is required")
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    seed = args.seed if args.seed is not None else int(raw.get("seed", 0))
    cfg = ExperimentConfig(raw, path.parent, Path(args.out), seed=seed, threads=max(1, args.threads))
    cfg.resolved()  # referenced files must exist and parse
    return cfg


# --- output ------------------------------------------------------------------------


def fmt(x) -> str:
    return f"{float(x):.17g}"


def _encode(obj, indent=0) -> str:
    """JSON with 17-significant-digit floats and sorted keys."""
    pad = " " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + " " * indent + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(_encode(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return json.dumps(str(x))
        return fmt(x)
    if isinstance(obj, complex):
        return _encode([obj.real, obj.imag], indent)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def write_json(cfg: ExperimentConfig, name: str, payload: dict) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    body = {"config_hash": cfg.hash, "version": __version__, **payload}
    path = cfg.out / name
    path.write_text(_encode(body) + "\n")
    return path


def write_csv(cfg: ExperimentConfig, name: str, header, rows) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_hash={cfg.hash}", ",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    path = cfg.out / name
    path.write_text("\n".join(lines) + "\n")
    return path


# --- subcommands ----------------------------------------------------------------------


def cmd_group_build(cfg: ExperimentConfig) -> int:
    G = cfg.group()
    gens = []
    for g in G.generators:
        gens.append({"matrix": g.to_list(), "class": classify(g).value, "trace": g.trace})
    write_json(
        cfg,
        "group.json",
        {
            "rank": G.rank,
            "circles": [c.to_dict() for c in G.circles],
            "generators": gens,
            "loxodromic": all(x["class"] == "loxodromic" for x in gens),
            "rect": list(G.rect) if G.rect else None,
        },
    )
    return EXIT_OK


def cmd_limit(cfg: ExperimentConfig) -> int:
    G = cfg.group()
    opts = cfg.get("limit", {})
    sample = limitset.sample_limit_set(G, int(opts.get("word_len", 6)))
    scales = opts.get("scales", list(limitset.DEFAULT_SCALES))
    dim = limitset.box_dimension(sample, scales)
    write_csv(cfg, "limit_points.csv", ["re", "im"], [(z.real, z.imag) for z in sample.points])
    payload = {"limit_points": len(sample), "word_len": sample.word_len, **dim.to_dict()}
    if "R_max" in opts:
        fit = limitset.orbital_growth(G, float(opts["R_max"]), opts.get("max_len"))
        payload["delta"] = {"exponent": fit.exponent, "stderr": fit.stderr, "max_len": fit.max_len}
    write_json(cfg, "dimension.json", payload)
    return EXIT_OK


def _diffeo(cfg, desc, G=None):
    return qc.from_dict(desc, rect=G.rect if G is not None else None)


def cmd_kernel(cfg: ExperimentConfig) -> int:
    G = cfg.group()
    p = cfg.spectral().require_convergent()
    grid = scattering.tensor_grid(G, int(cfg.get("grid", scattering.DEFAULT_GRID)))
    M = scattering.assemble_operator(
        G, p, grid, int(cfg.get("max_len", scattering.DEFAULT_MAX_LEN)),
        cfg.get("prune_tol", scattering.DEFAULT_PRUNE_TOL),
    )
    M.meta["config_hash"] = cfg.hash
    cfg.out.mkdir(parents=True, exist_ok=True)
    M.save(cfg.out / "kernel")
    write_json(cfg, "kernel_norm.json", {"nodes": len(grid), "norm": scattering.operator_norm(M), **M.meta})
    return EXIT_OK


SWEEP_FAMILIES = {
    "linear-beltrami": lambda v: qc.LinearBeltrami(complex(v)),
    "radial-stretch": lambda v: qc.RadialStretch(float(v)),
}


def cmd_srel_sweep(cfg: ExperimentConfig) -> int:
    G = cfg.group()
    p = cfg.spectral().require_convergent()
    sw = cfg.get("sweep")
    if not sw or "values" not in sw:
        raise ConfigError("srel-sweep needs a 'sweep' entry with 'values'")
    fam = sw.get("family", "linear-beltrami")
    if fam not in SWEEP_FAMILIES:
        raise ConfigError(f"unknown sweep family {fam!r}")
    values = sorted(float(v) for v in sw["values"])
    n_side = int(cfg.get("grid", scattering.DEFAULT_GRID))
    max_len = int(cfg.get("max_len", scattering.DEFAULT_MAX_LEN))
    prune = cfg.get("prune_tol", scattering.DEFAULT_PRUNE_TOL)

    def row(v):
        try:
            psi = SWEEP_FAMILIES[fam](v)
            if fam == "linear-beltrami" and v == 0:
                psi = qc.Identity()
            rep = qc.dilatation(psi, rect=G.rect or (-1, 1, -1, 1), n=64)
            run = scattering.relative_scattering(G, psi, p, n_side, max_len, prune)
            return (v, rep.K_from_lambda, run.norm, "ok")
        except (KleinscatError, ArithmeticError) as exc:
            return (v, float("nan"), float("nan"), f"error: {exc}".replace(",", ";"))

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        rows = list(pool.map(row, values))
    write_csv(cfg, "srel_sweep.csv", ["param", "K", "norm", "status"], rows)
    return EXIT_PARTIAL if any(r[3] != "ok" for r in rows) else EXIT_OK


def cmd_fsigma(cfg: ExperimentConfig) -> int:
    opts = cfg.get("fsigma", {})
    sigma = float(opts.get("sigma", 1.0))
    if "lambdas" in opts:
        lams = [float(x) for x in opts["lambdas"]]
    else:
        lo, hi = opts.get("range", [1.0, 8.0])
        lams = np.linspace(float(lo), float(hi), int(opts.get("n", 29))).tolist()
    if any(x < 1 for x in lams):
        raise ConfigError("lambda values must be >= 1")
    curve = bounds.fsigma_curve(sigma, lams)
    write_csv(cfg, "fsigma.csv", ["lambda", "f_sigma"], curve.rows())
    return EXIT_OK


def cmd_bounds(cfg: ExperimentConfig) -> int:
    opts = cfg.get("bounds", {})
    D = float(opts.get("D", 1.0))
    payload = {}
    if "K" in opts:
        payload["window"] = bounds.dimension_window(float(opts["K"]), D).to_dict()
        payload.update({"lower": payload["window"]["lower"], "upper": payload["window"]["upper"]})
    if "eps" in opts:
        sigma = float(opts.get("sigma", 1.0))
        eps_rows = []
        for e in opts["eps"]:
            delta = bounds.invert_bound(sigma, float(e))
            w = bounds.dimension_window(1 + delta, D)
            eps_rows.append({"eps": float(e), "delta": delta, "K": 1 + delta,
                             "lower": w.lower, "upper": w.upper, "nu": max(w.upper - D, D - w.lower)})
        payload["sigma"] = sigma
        payload["eps_table"] = eps_rows
    if not payload:
        raise ConfigError("bounds needs 'K' or 'eps'")
    write_json(cfg, "bounds.json", payload)
    return EXIT_OK


def cmd_probe(cfg: ExperimentConfig) -> int:
    opts = cfg.get("probe", {})
    G = cfg.group() if "group" in cfg.raw else None
    psi = _diffeo(cfg, opts.get("diffeo", cfg.get("diffeo", {"family": "identity"})), G)
    sigma = float(opts.get("sigma", 1.0))
    rows = []
    for a in opts.get("a", [0.1]):
        val = probes.probe_pairing(psi, sigma, float(a), G)
        lam = float(np.min(qc.lambda_max(psi, float(a) * qc.rect_grid((-1, 1, -1, 1), 16))))
        rows.append({"a": float(a), "pairing": val, "lambda_min": lam,
                     "lower_bound": bounds.f_sigma(sigma, lam) / (8 * math.pi),
                     "norm_sq_lower": val / (2 * sigma**2)})
    write_json(cfg, "probe.json", {"sigma": sigma, "diffeo": psi.to_dict(), "rows": rows})
    return EXIT_OK


def cmd_report(cfg: ExperimentConfig) -> int:
    """Collect every JSON and CSV already in --out into report.json."""
    items = {}
    for path in sorted(cfg.out.glob("*")):
        if path.name == "report.json" or path.suffix not in (".json", ".csv"):
            continue
        if path.suffix == ".json":
            try:
                items[path.name] = json.loads(path.read_text())
            except json.JSONDecodeError:
                continue
        else:
            items[path.name] = {"rows": max(0, len(path.read_text().splitlines()) - 2)}
    write_json(cfg, "report.json", {"outputs": items})
    return EXIT_OK


COMMANDS = {
    "group-build": cmd_group_build,
    "limit": cmd_limit,
    "kernel": cmd_kernel,
    "srel-sweep": cmd_srel_sweep,
    "fsigma": cmd_fsigma,
    "bounds": cmd_bounds,
    "probe": cmd_probe,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kleinscat", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="experiment config JSON")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--threads", type=int, default=1, help="concurrent sweep rows")
    ap.add_argument("--seed", type=int, default=None, help="recorded in the config hash")
    return ap


@dataclass
class RunRecord:
    config_hash: str
    version: str
    wall_time: float
    command: str
    status: int

    def to_json(self) -> str:
        return json.dumps(self.__dict__)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = load_config(args)
        status = COMMANDS[args.command](cfg)
    except KleinscatError as exc:
        print(f"kleinscat {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    # wall time goes to stderr only so that output files stay byte-identical
    rec = RunRecord(cfg.hash, __version__, time.perf_counter() - t0, args.command, status)
    print(rec.to_json(), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
