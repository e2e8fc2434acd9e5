"""Batch study driver and command-line interface.

A study runs the mesh / assemble / solve pipeline over a doubling family of
levels, extrapolates the matched eigenvalue sequences, optionally measures
projection distances for the first mode, and writes a CSV table, a JSON
mirror and a plain-text summary.  Reports are deterministic: identical
configurations produce byte-identical CSV and JSON, so wall-clock timings
go to stdout and a separate timings file.
"""

import argparse
import configparser
import json
import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import AssemblyError, assemble, dump_matrix
from .coefficients import get_preset, preset_names, triangle_rule
from .eigensolver import (EigenResult, NumericalError,
                          solve_mixed_eigenproblem)
from .extrapolation import (ConvergenceTable, SupercloseBlock, build_table,
                            match_and_cluster)
from .mesh import MeshError, build_structured_mesh
from .superclose import (l2_errors, laplace_eigenpair, laplace_eigenvalues,
                         p0_project, superclose_distance)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

CSV_COLUMNS = [
    "eigen", "level_n", "h", "lambda_h", "lambda_extrap", "err_raw",
    "err_extrap", "order_raw", "order_extrap", "superclose", "err_u",
    "err_sigma",
]


class ConfigError(Exception):
    """Invalid study configuration or unusable output location."""


@dataclass
class StudyConfig:
    """One study: a preset solved over doubling levels.

    Unknown keys in a config file are rejected, not ignored, so a stored
    configuration always reproduces the same study.
    """

    preset: str
    levels: list[int]
    k: int
    expansion_order: float = 2.0
    compute_superclose: bool = False
    dump_matrices: bool = False
    solver: str = "dense"
    output_dir: Path = Path("out")
    seed: int = 0

    def validate(self):
        if self.preset not in preset_names():
            raise ConfigError(
                f"unknown preset {self.preset!r}, "
                f"available: {', '.join(preset_names())}")
        if len(self.levels) < 2:
            raise ConfigError("need at least two levels")
        for n0, n1 in zip(self.levels, self.levels[1:]):
            if n1 != 2 * n0:
                raise ConfigError(
                    f"levels must strictly double, got {n0} then {n1}")
        if self.levels[0] < 1:
            raise ConfigError("levels must be positive")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        max_k = 2 * self.levels[0] ** 2
        if self.k > max_k:
            raise ConfigError(
                f"k = {self.k} exceeds the {max_k} unknowns of level "
                f"n = {self.levels[0]}")
        if self.expansion_order <= 0:
            raise ConfigError(
                f"expansion order must be positive, got {self.expansion_order}")
        if self.solver not in ("dense", "iterative"):
            raise ConfigError(
                f"solver must be 'dense' or 'iterative', got {self.solver!r}")
        return self


_STUDY_KEYS = {
    "preset", "levels", "k", "expansion_order", "seed",
    "compute_superclose", "dump_matrices", "solver",
}
_OUTPUT_KEYS = {"directory"}


def _parse_levels(text: str) -> list[int]:
    parts = text.replace(",", " ").split()
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"levels must be integers, got {text!r}") from None


def _parse_bool(text: str, key: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ConfigError(f"{key} must be 'true' or 'false', got {text!r}")


def parse_config(path) -> StudyConfig:
    """Read a study configuration file, rejecting unknown sections or keys."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep keys case-sensitive
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    sections = set(parser.sections())
    unknown = sections - {"study", "output"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    if "study" not in sections:
        raise ConfigError("missing [study] section")
    study = dict(parser["study"])
    bad = set(study) - _STUDY_KEYS
    if bad:
        raise ConfigError(f"unknown [study] keys: {sorted(bad)}")
    out = dict(parser["output"]) if "output" in sections else {}
    bad = set(out) - _OUTPUT_KEYS
    if bad:
        raise ConfigError(f"unknown [output] keys: {sorted(bad)}")
    for key in ("preset", "levels", "k"):
        if key not in study:
            raise ConfigError(f"missing required [study] key: {key}")

    try:
        cfg = StudyConfig(
            preset=study["preset"],
            levels=_parse_levels(study["levels"]),
            k=int(study["k"]),
            expansion_order=float(study.get("expansion_order", 2.0)),
            seed=int(study.get("seed", 0)),
            compute_superclose=_parse_bool(
                study.get("compute_superclose", "false"),
                "compute_superclose"),
            dump_matrices=_parse_bool(
                study.get("dump_matrices", "false"), "dump_matrices"),
            solver=study.get("solver", "dense"),
            output_dir=Path(out.get("directory", "out")),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid value in {path}: {exc}") from exc
    return cfg.validate()


@dataclass
class LevelRun:
    """Mesh, assembled system and eigenpairs of one study level."""

    mesh: object
    system: object
    result: EigenResult


def run_level(cfg: StudyConfig, prob, n: int) -> LevelRun:
    """Build, assemble and solve one mesh level."""
    mesh = build_structured_mesh(prob.domain, n)
    sys_ = assemble(mesh, prob)
    if cfg.dump_matrices:
        mdir = cfg.output_dir
        mdir.mkdir(parents=True, exist_ok=True)
        for name, block in (("M", sys_.M), ("B", sys_.B),
                            ("C", sys_.C), ("D", sys_.D)):
            (mdir / f"matrix_n{n}_{name}.txt").write_text(dump_matrix(block))
    result = solve_mixed_eigenproblem(
        mesh, sys_, cfg.k, method=cfg.solver, seed=cfg.seed)
    return LevelRun(mesh=mesh, system=sys_, result=result)


def _superclose_block(cfg, prob, runs) -> SupercloseBlock:
    """Projection distances and plain errors for the first (simple) mode."""
    exact = laplace_eigenpair(1, 1, prob.domain)
    rule3 = triangle_rule(3)
    dist, dist_plain, err_u, err_sigma = [], [], [], []
    for run in runs:
        mesh, sys_ = run.mesh, run.system
        pu = p0_project(exact.u, mesh, rule3)
        u_h = run.result.pairs[0].u
        dist.append(superclose_distance(u_h, pu, sys_.D))
        dist_plain.append(
            superclose_distance(u_h, pu, sys_.D, weighted=False))
        eu, es = l2_errors(run.result.pairs[0], exact, mesh, rule3, A=prob.A)
        err_u.append(eu)
        err_sigma.append(es)
    return SupercloseBlock(
        mode=(1, 1),
        distance=np.array(dist),
        distance_plain=np.array(dist_plain),
        err_u=np.array(err_u),
        err_sigma=np.array(err_sigma),
    )


def run_study(cfg: StudyConfig):
    """Run every level of a study and write reports.

    Returns (table, results).  A level failure still writes reports for the
    levels that completed, marked failed, and then re-raises with the level
    attached.
    """
    cfg.validate()
    prob = get_preset(cfg.preset)
    runs: list[LevelRun] = []
    failures: list[dict] = []
    timings: list[float] = []
    total_start = time.perf_counter()
    for n in cfg.levels:
        start = time.perf_counter()
        try:
            runs.append(run_level(cfg, prob, n))
        except (MeshError, AssemblyError, NumericalError) as exc:
            failures.append({"n": n, "error": str(exc)})
            break
        timings.append(time.perf_counter() - start)
    total = time.perf_counter() - total_start

    table = None
    if len(runs) >= 2:
        seq = match_and_cluster(
            [(r.result.n, r.result.h, r.result.eigenvalues) for r in runs],
            p=cfg.expansion_order)
        reference = None
        if prob.has_analytic_spectrum:
            reference = laplace_eigenvalues(
                cfg.k, prob.domain, shift=prob.analytic_shift)
        table = build_table(seq, p=cfg.expansion_order, reference=reference)
        if cfg.compute_superclose and prob.has_analytic_spectrum:
            table.superclose = _superclose_block(cfg, prob, runs)

    results = [r.result for r in runs]
    emit_reports(table, cfg, results, failures)
    _print_summary(table, cfg, results, failures, timings, total)
    _write_timings(cfg, timings, total)

    if failures:
        f = failures[0]
        raise NumericalError(f"level n={f['n']} failed: {f['error']}")
    return table, runs


# ---------------------------------------------------------------------------
# reporting

def _f12(v) -> str:
    """12-significant-digit text for a float, empty for missing."""
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return ""
    return f"{v:.12g}"


def _round12(v):
    """Float rounded to 12 significant digits; None for missing/NaN."""
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return None
    return float(f"{v:.12g}")


def _csv_rows(table: ConvergenceTable):
    rows = []
    nlev = len(table.level_ns)
    sc = table.superclose
    for row in table.rows:
        carries_mode = 0 in row.indices
        for i in range(nlev):
            rec = {
                "eigen": row.label,
                "level_n": str(table.level_ns[i]),
                "h": _f12(table.level_hs[i]),
                "lambda_h": _f12(row.raw[i]),
                "lambda_extrap": _f12(row.extrapolated[i - 1]) if i else "",
                "err_raw": _f12(row.err_raw[i]),
                "err_extrap": _f12(row.err_extrap[i - 1]) if i else "",
                "order_raw": _f12(row.order_raw[i - 1]) if i else "",
                "order_extrap": (_f12(row.order_extrap[i - 2])
                                 if i >= 2 else ""),
                "superclose": "",
                "err_u": "",
                "err_sigma": "",
            }
            if sc is not None and carries_mode:
                rec["superclose"] = _f12(sc.distance[i])
                rec["err_u"] = _f12(sc.err_u[i])
                rec["err_sigma"] = _f12(sc.err_sigma[i])
            rows.append(rec)
    return rows


def _json_payload(table, cfg, results, failures):
    levels = []
    for res in results:
        levels.append({
            "n": res.n,
            "h": _round12(res.h),
            "edges": res.num_edges,
            "triangles": res.num_triangles,
            "status": "ok",
            "eigenvalues": [_round12(p.lambda_h) for p in res.pairs],
            "residuals": [_round12(p.residual) for p in res.pairs],
        })
    for f in failures:
        levels.append({"n": f["n"], "status": "failed", "error": f["error"]})

    payload = {
        "tool": {"name": "rt0eig", "version": __version__},
        "study": {
            "preset": cfg.preset,
            "levels": list(cfg.levels),
            "k": cfg.k,
            "expansion_order": cfg.expansion_order,
            "solver": cfg.solver,
            "seed": cfg.seed,
            "compute_superclose": cfg.compute_superclose,
        },
        "status": "failed" if failures else "ok",
        "levels": levels,
        "eigen": [],
        "superclose": None,
    }
    if table is None:
        return payload
    payload["reference_kind"] = table.reference_kind
    for row in table.rows:
        payload["eigen"].append({
            "label": row.label,
            "indices": [i + 1 for i in row.indices],
            "reference": _round12(row.reference),
            "lambda_h": [_round12(v) for v in row.raw],
            "lambda_extrap": [_round12(v) for v in row.extrapolated],
            "err_raw": [_round12(v) for v in row.err_raw],
            "err_extrap": [_round12(v) for v in row.err_extrap],
            "order_raw": [_round12(v) for v in row.order_raw],
            "order_extrap": [_round12(v) for v in row.order_extrap],
        })
    sc = table.superclose
    if sc is not None:
        payload["superclose"] = {
            "mode": list(sc.mode),
            "distance": [_round12(v) for v in sc.distance],
            "distance_plain": [_round12(v) for v in sc.distance_plain],
            "err_u": [_round12(v) for v in sc.err_u],
            "err_sigma": [_round12(v) for v in sc.err_sigma],
            "order_distance": [_round12(v) for v in sc.order_distance],
            "order_err_u": [_round12(v) for v in sc.order_err_u],
            "order_err_sigma": [_round12(v) for v in sc.order_err_sigma],
        }
    return payload


def emit_reports(table, cfg: StudyConfig, results, failures=()):
    """Write report.csv and report.json under the configured directory."""
    out = cfg.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_lines = [",".join(CSV_COLUMNS)]
        if table is not None:
            for rec in _csv_rows(table):
                csv_lines.append(",".join(rec[c] for c in CSV_COLUMNS))
        (out / "report.csv").write_text("\n".join(csv_lines) + "\n")
        payload = _json_payload(table, cfg, results, list(failures))
        (out / "report.json").write_text(
            json.dumps(payload, indent=2) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write reports under {out}: {exc}") from exc
    return {"csv": out / "report.csv", "json": out / "report.json"}


def _write_timings(cfg, timings, total):
    data = {
        "levels": [{"n": n, "seconds": t}
                   for n, t in zip(cfg.levels, timings)],
        "total_seconds": total,
    }
    try:
        (cfg.output_dir / "timings.json").write_text(
            json.dumps(data, indent=2) + "\n")
    except OSError:
        pass  # timings are advisory


def _print_summary(table, cfg, results, failures, timings, total, out=None):
    w = (out or sys.stdout).write
    w(f"study: preset={cfg.preset} levels={cfg.levels} k={cfg.k} "
      f"solver={cfg.solver}\n")
    for res, secs in zip(results, timings):
        w(f"  level n={res.n:<4d} h={res.h:.6g}  edges={res.num_edges} "
          f"triangles={res.num_triangles}  [{secs:.2f}s]\n")
    for f in failures:
        w(f"  level n={f['n']:<4d} FAILED: {f['error']}\n")
    if table is not None:
        w(f"reference: {table.reference_kind}\n")
        header = (f"{'eigen':>6} {'n':>5} {'lambda_h':>16} "
                  f"{'extrapolated':>16} {'err_raw':>11} {'err_extrap':>11} "
                  f"{'ord':>6} {'ord_x':>6}\n")
        w(header)
        for row in table.rows:
            for i, n in enumerate(table.level_ns):
                lam_x = _f12(row.extrapolated[i - 1]) if i else ""
                err_x = f"{row.err_extrap[i - 1]:.5e}" if i else ""
                p_raw = (f"{row.order_raw[i - 1]:.2f}"
                         if i and not math.isnan(row.order_raw[i - 1]) else "")
                p_x = (f"{row.order_extrap[i - 2]:.2f}"
                       if i >= 2 and not math.isnan(row.order_extrap[i - 2])
                       else "")
                w(f"{row.label:>6} {n:>5} {row.raw[i]:>16.10g} "
                  f"{lam_x:>16.16s} {row.err_raw[i]:>11.5e} "
                  f"{err_x:>11} {p_raw:>6} {p_x:>6}\n")
        sc = table.superclose
        if sc is not None:
            w("superclose (mode 1,1):\n")
            for i, n in enumerate(table.level_ns):
                od = (f"{sc.order_distance[i - 1]:.2f}" if i else "")
                ou = (f"{sc.order_err_u[i - 1]:.2f}" if i else "")
                w(f"  n={n:<4d} distance={sc.distance[i]:.6e} ({od:>5}) "
                  f"err_u={sc.err_u[i]:.6e} ({ou:>5}) "
                  f"err_sigma={sc.err_sigma[i]:.6e}\n")
    w(f"total time: {total:.2f}s\n")


# ---------------------------------------------------------------------------
# command line

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rt0eig",
        description="Mixed finite element eigenvalue convergence studies "
                    "with Richardson extrapolation.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a study from a config file")
    run.add_argument("config", help="path to the study config file")
    run.add_argument("--output-dir", help="override the output directory")
    run.add_argument("--levels", help="override levels, e.g. '8,16,32'")
    run.add_argument("--k", type=int, help="override the eigenvalue count")
    sub.add_parser("presets", help="list built-in problem presets")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "presets":
        for name in preset_names():
            print(name)
        return EXIT_OK
    try:
        cfg = parse_config(args.config)
        if args.output_dir:
            cfg = replace(cfg, output_dir=Path(args.output_dir))
        if args.levels:
            cfg = replace(cfg, levels=_parse_levels(args.levels))
        if args.k is not None:
            cfg = replace(cfg, k=args.k)
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        run_study(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MeshError, AssemblyError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
