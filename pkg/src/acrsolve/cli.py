"""Command-line driver: generate model problems, solve, verify, sweep,
and export.

Subcommands:
  solve   run the hierarchical cyclic reduction solver, write a report
  verify  cross-check against dense BCR and dense LU on small problems
  sweep   run a parameter sweep (n, eps, k, alpha), emit a CSV table and
          optionally render diagnostic figures next to it
  export  write the assembled matrix (Matrix Market) and rhs to files
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import mmio
from .hodlr import Tolerance
from .oracles import dense_lu_solve, relative_residual
from .problems import (BlockTridiagSystem, CoefficientField, Grid2D,
                       assemble_full, checkerboard_kappa, constant_kappa,
                       convdiff2d, helmholtz2d, poisson2d)
from .reduction import acr_solve, dense_bcr_solve

CSV_COLUMNS = ["problem", "n", "N", "eps", "param", "levels", "max_rank",
               "storage_bytes", "reduce_ms", "backsub_ms", "residual"]

PROBLEMS = ("poisson", "helmholtz", "convdiff")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str
    n: int
    eps: float = 1e-8
    k: Optional[float] = None
    alpha: Optional[float] = None
    kappa: Optional[str] = None
    leaf_size: int = 32
    cutoff_blocks: int = 1
    threads: int = 1
    fmt: str = "json"
    out: Optional[str] = None
    threshold: float = 1e-6

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; "
                              f"choose from {PROBLEMS}")
        if self.n < 2:
            raise ConfigError(f"--n must be >= 2, got {self.n}")
        if self.eps <= 0:
            raise ConfigError(f"--eps must be > 0, got {self.eps}")
        if self.leaf_size < 1 or self.cutoff_blocks < 1 or self.threads < 1:
            raise ConfigError("--leaf-size, --cutoff and --threads must be >= 1")
        if self.fmt not in ("json", "csv"):
            raise ConfigError(f"--format must be json or csv, got {self.fmt}")
        # only the parameters relevant to the chosen problem are accepted
        if self.problem == "poisson":
            self._reject("k", self.k)
            self._reject("alpha", self.alpha)
        elif self.problem == "helmholtz":
            self._reject("alpha", self.alpha)
            self._reject("kappa", self.kappa)
            if self.k is None:
                raise ConfigError("helmholtz requires --k")
            if self.k < 0:
                raise ConfigError(f"--k must be >= 0, got {self.k}")
        elif self.problem == "convdiff":
            self._reject("k", self.k)
            self._reject("kappa", self.kappa)
            if self.alpha is None:
                raise ConfigError("convdiff requires --alpha")
            if self.alpha < 0:
                raise ConfigError(f"--alpha must be >= 0, got {self.alpha}")

    def _reject(self, name, value):
        if value is not None:
            raise ConfigError(
                f"--{name} is not a parameter of problem {self.problem!r}")

    @property
    def param_value(self) -> float:
        if self.problem == "helmholtz":
            return self.k
        if self.problem == "convdiff":
            return self.alpha
        return 0.0


def parse_kappa(spec: Optional[str]) -> CoefficientField:
    if spec is None or spec == "":
        return constant_kappa(1.0)
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "const":
            return constant_kappa(float(parts[1]) if len(parts) > 1 else 1.0)
        if kind == "checkerboard":
            contrast = float(parts[1]) if len(parts) > 1 else 1e3
            cells = int(parts[2]) if len(parts) > 2 else 4
            return checkerboard_kappa(contrast, cells)
        if kind == "file":
            values = np.loadtxt(parts[1])
            if values.ndim != 2:
                raise ConfigError("kappa file must contain a 2D grid of values")

            def fn(x, y, values=values):
                ny, nx = values.shape
                ix = np.clip((np.asarray(x) * nx).astype(int), 0, nx - 1)
                iy = np.clip((np.asarray(y) * ny).astype(int), 0, ny - 1)
                return values[iy, ix]

            return CoefficientField(fn, name=f"file:{parts[1]}")
    except (ValueError, IndexError) as e:
        raise ConfigError(f"bad kappa spec {spec!r}: {e}") from e
    except OSError as e:
        raise ConfigError(f"cannot read kappa file: {e}") from e
    raise ConfigError(f"unknown kappa spec {spec!r}; "
                      "use const:V, checkerboard:CONTRAST[:CELLS], or file:PATH")


def build_system(cfg: RunConfig) -> BlockTridiagSystem:
    grid = Grid2D(cfg.n)
    if cfg.problem == "poisson":
        return poisson2d(grid, parse_kappa(cfg.kappa))
    if cfg.problem == "helmholtz":
        return helmholtz2d(grid, cfg.k)
    return convdiff2d(grid, cfg.alpha)


def _report_row(cfg: RunConfig, report, param=None) -> dict:
    return {
        "problem": cfg.problem,
        "n": cfg.n,
        "N": cfg.n * cfg.n,
        "eps": cfg.eps,
        "param": cfg.param_value if param is None else param,
        "levels": report.levels,
        "max_rank": report.max_rank,
        "storage_bytes": report.storage_bytes,
        "reduce_ms": round(report.reduce_ms, 3),
        "backsub_ms": round(report.backsub_ms, 3),
        "residual": report.residual,
    }


def _write_text(out: Optional[str], text: str):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w") as fh:
            fh.write(text)
    except OSError as e:
        raise ConfigError(f"cannot write {out}: {e}") from e


def _rows_to_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_solve(cfg: RunConfig) -> int:
    cfg.validate()
    sys_ = build_system(cfg)
    tol = Tolerance(cfg.eps)
    u, report = acr_solve(sys_, tol, cutoff_blocks=cfg.cutoff_blocks,
                          leaf_size=cfg.leaf_size)
    report.threads = cfg.threads
    if cfg.fmt == "json":
        payload = {"config": {"problem": cfg.problem, "n": cfg.n,
                              "eps": cfg.eps, "param": cfg.param_value,
                              "leaf_size": cfg.leaf_size,
                              "cutoff_blocks": cfg.cutoff_blocks},
                   "report": report.to_dict()}
        _write_text(cfg.out, json.dumps(payload, indent=2) + "\n")
    else:
        _write_text(cfg.out, _rows_to_csv([_report_row(cfg, report)]))
    print(f"residual = {report.residual:.3e}  max_rank = {report.max_rank}  "
          f"levels = {report.levels}", file=sys.stderr)
    return 0 if report.residual <= cfg.threshold else 2


def cmd_verify(cfg: RunConfig, threshold: float = 1e-8) -> int:
    cfg.validate()
    if cfg.n * cfg.n > 16384:
        raise ConfigError(
            f"verify needs a dense oracle; n={cfg.n} gives N={cfg.n**2} > 16384")
    sys_ = build_system(cfg)
    tol = Tolerance(cfg.eps)
    u_acr, _ = acr_solve(sys_, tol, cutoff_blocks=cfg.cutoff_blocks,
                         leaf_size=cfg.leaf_size)
    u_bcr = dense_bcr_solve(sys_)
    A = assemble_full(sys_).toarray()
    u_lu = dense_lu_solve(A, sys_.rhs)
    scale_norm = np.linalg.norm(u_lu)

    def rel(a, b):
        return float(np.linalg.norm(a - b) / max(scale_norm, 1e-300))

    pairs = {"acr_vs_lu": rel(u_acr, u_lu),
             "acr_vs_bcr": rel(u_acr, u_bcr),
             "bcr_vs_lu": rel(u_bcr, u_lu)}
    for name, diff in pairs.items():
        print(f"{name}: {diff:.3e}")
    ok = all(d <= threshold for d in pairs.values())
    print("verify:", "OK" if ok else "MISMATCH")
    return 0 if ok else 2


def cmd_sweep(cfg: RunConfig, axis: str, values: List[float],
              plot: bool = False) -> int:
    if axis not in ("n", "eps", "k", "alpha"):
        raise ConfigError(f"unknown sweep axis {axis!r}")
    if not values:
        raise ConfigError("sweep needs a nonempty --values list")
    if sorted(values) != list(values):
        raise ConfigError("sweep values must be sorted ascending")
    if axis == "k" and cfg.problem != "helmholtz":
        raise ConfigError("k-sweep applies to the helmholtz problem only")
    if axis == "alpha" and cfg.problem != "convdiff":
        raise ConfigError("alpha-sweep applies to the convdiff problem only")

    rows = []
    for v in values:
        run = RunConfig(**{**cfg.__dict__})
        if axis == "n":
            run.n = int(v)
        elif axis == "eps":
            run.eps = float(v)
        elif axis == "k":
            run.k = float(v)
        else:
            run.alpha = float(v)
        run.validate()
        sys_ = build_system(run)
        u, report = acr_solve(sys_, Tolerance(run.eps),
                              cutoff_blocks=run.cutoff_blocks,
                              leaf_size=run.leaf_size)
        param = v if axis != "n" else run.param_value
        row = _report_row(run, report, param=param)
        rows.append(row)
        print(f"{axis}={v}: residual={report.residual:.3e} "
              f"max_rank={report.max_rank}", file=sys.stderr)

    _write_text(cfg.out, _rows_to_csv(rows))

    if axis == "n":
        N = np.array([r["N"] for r in rows], dtype=float)
        t = np.array([r["reduce_ms"] + r["backsub_ms"] for r in rows])
        m = np.array([r["storage_bytes"] for r in rows], dtype=float)
        p_time = float(np.polyfit(np.log(N), np.log(np.maximum(t, 1e-9)), 1)[0])
        p_mem = float(np.polyfit(np.log(N), np.log(m), 1)[0])
        print(f"fit: time ~ N^{p_time:.3f}, memory ~ N^{p_mem:.3f}")
        if cfg.out:
            with open(_stem(cfg.out) + "_fit.json", "w") as fh:
                json.dump({"p_time": p_time, "p_mem": p_mem}, fh, indent=2)

    if plot:
        from .plots import render_sweep_figures
        stem = _stem(cfg.out) if cfg.out else "sweep"
        for path in render_sweep_figures(rows, axis, stem):
            print(f"wrote {path}", file=sys.stderr)
    return 0


def _stem(path: str) -> str:
    stem, ext = os.path.splitext(path)
    return stem if ext else path


def cmd_export(cfg: RunConfig) -> int:
    cfg.validate()
    if cfg.out is None:
        raise ConfigError("export requires --out PATH")
    outdir = os.path.dirname(os.path.abspath(cfg.out))
    if not os.path.isdir(outdir):
        raise ConfigError(f"output directory does not exist: {outdir}")
    sys_ = build_system(cfg)
    A = assemble_full(sys_)
    stem = _stem(cfg.out)
    mtx_path = stem + ".mtx"
    rhs_path = stem + ".rhs.txt"
    mmio.write_matrix_market(mtx_path, A, comment=sys_.name)
    mmio.write_vector(rhs_path, sys_.rhs)
    print(f"wrote {mtx_path} ({A.nnz} nonzeros) and {rhs_path}",
          file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--problem", choices=PROBLEMS, required=True)
    p.add_argument("--n", type=int, required=True,
                   help="interior grid points per dimension")
    p.add_argument("--eps", type=float, default=1e-8,
                   help="relative truncation tolerance")
    p.add_argument("--k", type=float, default=None, help="Helmholtz wavenumber")
    p.add_argument("--alpha", type=float, default=None,
                   help="convection strength")
    p.add_argument("--kappa", type=str, default=None,
                   help="diffusion coefficient: const:V, "
                        "checkerboard:CONTRAST[:CELLS], file:PATH")
    p.add_argument("--leaf-size", type=int, default=32)
    p.add_argument("--cutoff", type=int, default=1,
                   help="stop reduction at this many blocks")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", dest="fmt", choices=("json", "csv"),
                   default="json")
    p.add_argument("--out", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acr",
        description="Fast direct solver for rank-compressible block "
                    "tridiagonal systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a model problem")
    _add_common(p)
    p.add_argument("--threshold", type=float, default=1e-6,
                   help="residual threshold for exit status 0")

    p = sub.add_parser("verify", help="cross-check against dense oracles")
    _add_common(p)
    p.add_argument("--threshold", type=float, default=1e-8)

    p = sub.add_parser("sweep", help="parameter sweep, CSV output")
    _add_common(p)
    p.add_argument("--axis", choices=("n", "eps", "k", "alpha"), required=True)
    p.add_argument("--values", type=str, required=True,
                   help="comma-separated sweep values, ascending")
    p.add_argument("--plot", action="store_true",
                   help="render diagnostic figures next to the CSV")

    p = sub.add_parser("export", help="write Matrix Market matrix and rhs")
    _add_common(p)
    return parser


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        problem=args.problem, n=args.n, eps=args.eps, k=args.k,
        alpha=args.alpha, kappa=args.kappa, leaf_size=args.leaf_size,
        cutoff_blocks=args.cutoff, threads=args.threads, fmt=args.fmt,
        out=args.out, threshold=getattr(args, "threshold", 1e-6))


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, threshold=args.threshold)
        if args.command == "sweep":
            values = [float(v) for v in args.values.split(",") if v.strip()]
            return cmd_sweep(cfg, args.axis, values, plot=args.plot)
        if args.command == "export":
            return cmd_export(cfg)
        parser.error(f"unknown command {args.command}")
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except np.linalg.LinAlgError as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
