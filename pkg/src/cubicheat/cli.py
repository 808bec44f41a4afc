"""Command-line entry point.

Every command validates its parameters, runs, prints a JSON summary and,
given ``--output-dir``, writes its artifacts next to a ``manifest.json``
recording the resolved configuration, its hash and the library versions.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 internal inconsistency.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, snapshot
from .certifier import RecursionParams, certify, certify_theorem33, smallest_certified_N, tau_N
from .data import BumpSpec, OscillatingDatumSpec, ShellModel, build_bump, build_u0N, gaussian
from .errors import ConfigError, CubicHeatError, InternalInconsistency
from .field import Grid, RealField, SpectralField, l1_norm_spectral, to_physical, to_spectral
from .littlewood_paley import BesovParams, besov_report, build_partition
from .picard import TimeGrid, picard_iterate
from .solver import SolverConfig, solve

COMMANDS = ("simulate", "besov", "picard", "certify", "certify-thm33", "construct", "sweep")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_INCONSISTENT = 0, 1, 2, 3

DEFAULTS = {
    "dim": 3,
    "n": 32,
    "L": 16 * math.pi,
    "bump_center": 1 / 6,
    "bump_radius": 1 / 6,
    "u0": "bump",
    "t_end": 1.0,
    "dt_init": 1e-3,
    "dt_min": None,
    "cap": 1e8,
    "safety": 0.9,
    "rtol": 1e-4,
    "track_p": None,
    "snapshot_stride": 0,
    "symmetrize": False,
    "datum": "u0N",
    "N": 12,
    "log_N": None,
    "s": -2 / 3,
    "p": None,
    "q": 6.0,
    "mode": "auto",
    "tmax": 1.0,
    "nodes": 64,
    "tol": 1e-10,
    "max_iter": 60,
    "delta": 0.5,
    "A": 1.0,
    "w": "default",
    "w_file": None,
    "k_max": 40,
    "out": None,
    "what": "besov",
    "N_list": "100,1000,10000,100000",
    "q_list": "6,3",
}


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    params: dict
    seed: int = 0
    output_dir: Path | None = None
    explicit: set = field(default_factory=set)

    def canonical(self) -> str:
        return json.dumps({"command": self.command, "params": self.params, "seed": self.seed}, sort_keys=True)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--L", type=float)


def _bump_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bump-center", dest="bump_center", type=float)
    p.add_argument("--bump-radius", dest="bump_radius", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cubicheat", description="Cubic heat equation laboratory")
    parser.add_argument("--config", help="JSON file of parameters; flags override it")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="time-step u_t = Lap u + u^3")
    _grid_args(sim)
    _bump_args(sim)
    sim.add_argument("--u0", help="zero | constant:c | bump[:A] | u0N:N | gaussian:t | random:amp | file:path")
    sim.add_argument("--t-end", dest="t_end", type=float)
    sim.add_argument("--dt-init", dest="dt_init", type=float)
    sim.add_argument("--dt-min", dest="dt_min", type=float)
    sim.add_argument("--cap", type=float)
    sim.add_argument("--safety", type=float)
    sim.add_argument("--rtol", type=float)
    sim.add_argument("--track-p", dest="track_p", type=float)
    sim.add_argument("--snapshot-stride", dest="snapshot_stride", type=int)
    sim.add_argument("--symmetrize", action="store_const", const=True)

    bes = sub.add_parser("besov", help="homogeneous Besov norm report")
    _grid_args(bes)
    _bump_args(bes)
    bes.add_argument("--datum", help="u0N | bump[:A] | gaussian:t | random:amp | file:path")
    bes.add_argument("--N", type=int)
    bes.add_argument("--s", type=float)
    bes.add_argument("--p", type=float)
    bes.add_argument("--q", type=float)
    bes.add_argument("--mode", choices=("auto", "grid", "shell"))

    pic = sub.add_parser("picard", help="Picard iteration of the mild formulation")
    _grid_args(pic)
    _bump_args(pic)
    pic.add_argument("--u0")
    pic.add_argument("--p", type=float)
    pic.add_argument("--tmax", type=float)
    pic.add_argument("--nodes", type=int)
    pic.add_argument("--tol", type=float)
    pic.add_argument("--max-iter", dest="max_iter", type=int)

    cer = sub.add_parser("certify", help="amplitude blow-up certificate")
    cer.add_argument("--delta", type=float)
    cer.add_argument("--A", type=float)
    cer.add_argument("--w", help="'default' for a unit-mass bump")
    cer.add_argument("--w-file", dest="w_file", help="CHF1 snapshot of w")
    cer.add_argument("--k-max", dest="k_max", type=int)

    thm = sub.add_parser("certify-thm33", help="certificate for the oscillating datum u_{0,N}")
    _bump_args(thm)
    thm.add_argument("--delta", type=float)
    thm.add_argument("--N", type=int)
    thm.add_argument("--log-N", dest="log_N", type=float, help="natural log of N, for N beyond memory")

    con = sub.add_parser("construct", help="write an initial datum as a CHF1 snapshot")
    _grid_args(con)
    _bump_args(con)
    con.add_argument("--datum")
    con.add_argument("--out")

    swp = sub.add_parser("sweep", help="parameter sweeps written as CSV")
    _bump_args(swp)
    swp.add_argument("--what", choices=("besov", "tau", "thm33"))
    swp.add_argument("--N-list", dest="N_list")
    swp.add_argument("--q-list", dest="q_list")
    swp.add_argument("--delta", type=float)
    return parser


def parse_config(argv: list[str]) -> RunConfig:
    ns = build_parser().parse_args(argv)
    given = {k: v for k, v in vars(ns).items() if v is not None and k not in ("command", "config", "output_dir", "seed")}
    params = dict(DEFAULTS)
    file_seed = None
    file_out = None
    if ns.config:
        try:
            loaded = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        file_seed = loaded.pop("seed", None)
        file_out = loaded.pop("output_dir", None)
        loaded.pop("command", None)
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        params.update(loaded)
    params.update(given)
    seed = ns.seed if ns.seed is not None else (file_seed if file_seed is not None else 0)
    out = ns.output_dir or file_out
    return RunConfig(ns.command, params, int(seed), Path(out) if out else None, set(given))


# -- data ------------------------------------------------------------------------


def _grid(P: dict) -> Grid:
    return Grid(int(P["dim"]), int(P["n"]), float(P["L"]))


def _bump(P: dict) -> BumpSpec:
    return BumpSpec(center=float(P["bump_center"]), radius=float(P["bump_radius"]))


def make_datum(desc: str, grid: Grid, P: dict, seed: int) -> RealField:
    kind, _, arg = str(desc).partition(":")
    try:
        if kind == "zero":
            return RealField(grid, np.zeros(grid.shape))
        if kind == "constant":
            return RealField(grid, np.full(grid.shape, float(arg)))
        if kind == "bump":
            amp = float(arg) if arg else 1.0
            return RealField(grid, amp * build_bump(_bump(P), grid).values)
        if kind == "u0N":
            N = int(arg) if arg else int(P["N"])
            return build_u0N(OscillatingDatumSpec(N, _bump(P)), grid)
        if kind == "gaussian":
            return gaussian(float(arg), grid)
        if kind == "random":
            amp = float(arg) if arg else 0.1
            rng = np.random.default_rng(seed)
            F = to_spectral(rng.standard_normal(grid.shape), grid)
            F = np.where(grid.xi_abs <= grid.nyquist / 3, F, 0)
            F[(0,) * grid.dim] = 0
            v = to_physical(F, grid)
            return RealField(grid, amp * v / np.max(np.abs(v)))
        if kind == "file":
            f = snapshot.load(arg)
            if isinstance(f, SpectralField):
                f = RealField(f.grid, to_physical(f.coeffs, f.grid))
            if f.grid != grid:
                raise ConfigError(f"snapshot grid {f.grid} differs from requested {grid}")
            return f
    except ValueError as exc:
        if isinstance(exc, CubicHeatError):
            raise
        raise ConfigError(f"bad datum {desc!r}: {exc}") from exc
    raise ConfigError(f"unknown datum kind {kind!r}")


# -- commands --------------------------------------------------------------------


def _simulate(cfg: RunConfig, out: "_Artifacts") -> dict:
    P = cfg.params
    grid = _grid(P)
    u0 = make_datum(P["u0"], grid, P, cfg.seed)
    track_p = float(P["track_p"]) if P["track_p"] is not None else 2.0 * grid.dim
    sc = SolverConfig(
        grid=grid,
        t_end=float(P["t_end"]),
        dt_init=float(P["dt_init"]),
        dt_min=None if P["dt_min"] is None else float(P["dt_min"]),
        amplitude_cap=float(P["cap"]),
        safety=float(P["safety"]),
        rtol=float(P["rtol"]),
        track_p=track_p,
        symmetrize=bool(P["symmetrize"]),
        snapshot_stride=int(P["snapshot_stride"]),
    )
    res = solve(u0, sc)
    if out.active:
        res.write_csv(out.path("diagnostics.csv"))
        out.register("diagnostics.csv")
        for i, (t, F) in enumerate(res.strided):
            name = f"snapshots/step{i:05d}.chf1"
            out.path(name).parent.mkdir(exist_ok=True)
            snapshot.save(out.path(name), F)
            out.register(name)
        snapshot.save(out.path("final.chf1"), res.final)
        out.register("final.chf1")
    summary = res.summary()
    summary["final_Linf"] = float(res.diagnostics.Linf[-1])
    summary["min_spec_over_max"] = float(np.min(res.diagnostics.min_spec / res.diagnostics.max_spec))
    return summary


def _besov_grid_or_shell(P: dict, grid: Grid) -> str:
    if P["mode"] != "auto":
        return P["mode"]
    if P["datum"] != "u0N":
        return "grid"
    try:
        OscillatingDatumSpec(int(P["N"]), _bump(P))
        top = 2 ** int(P["N"]) - 1 + _bump(P).extent
    except OverflowError:
        return "shell"
    return "grid" if top < grid.nyquist else "shell"


def _besov(cfg: RunConfig, out: "_Artifacts") -> dict:
    P = cfg.params
    grid = _grid(P)
    params = BesovParams(float(P["s"]), 9.0 if P["p"] is None else float(P["p"]), float(P["q"]))
    mode = _besov_grid_or_shell(P, grid)
    if mode == "shell":
        if P["datum"] != "u0N":
            raise ConfigError("shell mode is only defined for the u0N datum")
        model = ShellModel(_bump(P), Grid(3, 64) if grid.dim == 3 and grid.n < 64 else grid, params.p)
        N = int(P["N"])
        report = {
            "s": params.s,
            "p": params.p,
            "q": params.q,
            "mode": "shell",
            "N": N,
            "j_min": min(model.low, default=model.k_exact),
            "j_max": N,
            "per_block": [[j, v] for j, v in model.block_values(N, params.s, j_stop=min(N, 64))],
            "total": model.norm(N, params.s, params.q),
        }
    else:
        f = make_datum(P["datum"], grid, P, cfg.seed)
        part = build_partition(grid)
        report = besov_report(f, params, part)
        report["per_block"] = [[j, v] for j, v in report["per_block"]]
        report["mode"] = "grid"
        report["grid"] = grid.describe()
    out.write_json("besov.json", report)
    return report


def _picard(cfg: RunConfig, out: "_Artifacts") -> dict:
    P = cfg.params
    grid = _grid(P)
    u0 = make_datum(P["u0"], grid, P, cfg.seed)
    tg = TimeGrid(float(P["tmax"]), int(P["nodes"]))
    p = 2.0 * grid.dim if P["p"] is None else float(P["p"])
    trace = picard_iterate(u0, tg, p, max_iter=int(P["max_iter"]), tol=float(P["tol"]))
    doc = trace.to_dict()
    doc["time_grid"] = tg.to_dict()
    doc["grid"] = grid.describe()
    out.write_json("picard_trace.json", doc)
    return {k: doc[k] for k in ("verdict", "final_Y", "C0", "eta", "ball", "x0_Y")} | {"iterations": len(doc["iterates"])}


def _w_l1(P: dict) -> float:
    if P["w_file"]:
        f = snapshot.load(P["w_file"])
        F = f if isinstance(f, SpectralField) else SpectralField(f.grid, to_spectral(f.values, f.grid))
        if np.min(F.coeffs.real) < -1e-12 * np.max(np.abs(F.coeffs)):
            raise ConfigError("w must have a nonnegative spectrum")
        return l1_norm_spectral(F)
    if P["w"] != "default":
        raise ConfigError("--w accepts only 'default'; use --w-file for other data")
    return 1.0


def _certify(cfg: RunConfig, out: "_Artifacts") -> dict:
    P = cfg.params
    w_l1 = _w_l1(P)
    cert = certify(RecursionParams(float(P["delta"]), float(P["A"]), math.log(w_l1), int(P["k_max"])))
    doc = cert.to_dict()
    doc["w_l1"] = w_l1
    out.write_json("certificate.json", doc)
    return doc


def _certify_thm33(cfg: RunConfig, out: "_Artifacts") -> dict:
    P = cfg.params
    if P["log_N"] is not None:
        cert = certify_theorem33(None, float(P["delta"]), _bump(P), log_N=float(P["log_N"]))
    else:
        cert = certify_theorem33(int(P["N"]), float(P["delta"]), _bump(P))
    doc = cert.to_dict()
    out.write_json("certificate.json", doc)
    return doc


def _construct(cfg: RunConfig, out: "_Artifacts") -> dict:
    P = cfg.params
    grid = _grid(P)
    f = make_datum(P["datum"], grid, P, cfg.seed)
    target = P["out"]
    if target:
        snapshot.save(target, f)
    if out.active:
        snapshot.save(out.path("datum.chf1"), f)
        out.register("datum.chf1")
    if not target and not out.active:
        raise ConfigError("construct needs --out or --output-dir")
    F = to_spectral(f.values, grid)
    return {
        "datum": P["datum"],
        "grid": grid.describe(),
        "max_abs": float(np.max(np.abs(f.values))),
        "spectral_l1": float(np.sum(np.abs(F)) * grid.spectral_cell),
        "min_spec_over_max": float(np.min(F.real) / np.max(np.abs(F))),
    }


def _parse_list(txt, cast):
    if isinstance(txt, (list, tuple)):
        return [cast(v) for v in txt]
    return [cast(float(v)) if cast is int else cast(v) for v in str(txt).split(",") if v.strip()]


def _sweep(cfg: RunConfig, out: "_Artifacts") -> dict:
    P = cfg.params
    what = P["what"]
    rows: list[list] = []
    if what == "besov":
        Ns = _parse_list(P["N_list"], int)
        qs = _parse_list(P["q_list"], float)
        model = ShellModel(_bump(P), Grid(3, 64), 9.0)
        header = ["N"] + [f"q={q:g}" for q in qs]
        for N in Ns:
            rows.append([N] + [model.norm(N, -2 / 3, q) for q in qs])
    elif what == "tau":
        Ns = _parse_list(P["N_list"], int)
        header = ["N", "tau_N"]
        rows = [[N, tau_N(N, float(P["delta"]))] for N in Ns]
    elif what == "thm33":
        res = smallest_certified_N(float(P["delta"]), _bump(P))
        header = list(res)
        rows = [[res[k] for k in header]]
    else:
        raise ConfigError(f"unknown sweep {what!r}")
    if out.active:
        with open(out.path("sweep.csv"), "w") as fh:
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in r) + "\n")
        out.register("sweep.csv")
    return {"what": what, "columns": header, "rows": rows}


HANDLERS = {
    "simulate": _simulate,
    "besov": _besov,
    "picard": _picard,
    "certify": _certify,
    "certify-thm33": _certify_thm33,
    "construct": _construct,
    "sweep": _sweep,
}


# -- artifacts -------------------------------------------------------------------


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, Path):
        return str(v)
    raise TypeError(f"not JSON serialisable: {type(v).__name__}")


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n"


class _Artifacts:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.root = cfg.output_dir
        self.files: list[str] = []
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            self._manifest(status="running")

    @property
    def active(self) -> bool:
        return self.root is not None

    def path(self, name: str) -> Path:
        return self.root / name

    def register(self, name: str) -> None:
        self.files.append(name)

    def write_json(self, name: str, doc) -> None:
        if self.active:
            self.path(name).write_text(dumps(doc))
            self.register(name)

    def _manifest(self, status: str, exit_code: int | None = None, error: str | None = None) -> None:
        doc = {
            "command": self.cfg.command,
            "config": self.cfg.params,
            "seed": self.cfg.seed,
            "config_sha256": self.cfg.digest,
            "versions": {
                "cubicheat": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "status": status,
            "exit_code": exit_code,
            "artifacts": {
                name: hashlib.sha256(self.path(name).read_bytes()).hexdigest() for name in sorted(self.files)
            },
        }
        if error:
            doc["error"] = error
        self.path("manifest.json").write_text(dumps(doc))

    def finish(self, exit_code: int, error: str | None = None) -> None:
        if self.active:
            self._manifest("done" if exit_code == 0 else "failed", exit_code, error)


def run(cfg: RunConfig) -> int:
    if cfg.command not in HANDLERS:
        print(f"error: unknown command {cfg.command}", file=sys.stderr)
        return EXIT_CONFIG
    out = _Artifacts(cfg)
    try:
        summary = HANDLERS[cfg.command](cfg, out)
    except InternalInconsistency as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        out.finish(EXIT_INCONSISTENT, str(exc))
        return EXIT_INCONSISTENT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        out.finish(EXIT_CONFIG, str(exc))
        return EXIT_CONFIG
    except (CubicHeatError, FloatingPointError, OverflowError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        out.finish(EXIT_NUMERICAL, str(exc))
        return EXIT_NUMERICAL
    sys.stdout.write(dumps(summary))
    out.finish(EXIT_OK)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
