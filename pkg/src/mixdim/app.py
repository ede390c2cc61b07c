"""Segment generation, segment files and the end-to-end pipeline."""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import assemble_system, build_blocks
from .config import GeneratorSpec, RunConfig
from .mesh import FACE_TAGS, SegmentGeom, build_box_mesh
from .postprocess import (
    boundary_fluxes,
    equivalent_transmissivity,
    export_fields,
    pressure_drop_pair,
    write_flux_csv,
)
from .solver import ReducedOperator, cg_solve, recover_state

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = (
    "N", "Nhat", "Nphi", "Npsi", "cg_iters", "iter_ratio",
    "sigma_xm", "sigma_xp", "sigma_ym", "sigma_yp", "sigma_zm", "sigma_zp",
    "total_mismatch", "rel_mismatch", "Keq",
)


class StageError(RuntimeError):
    """A pipeline failure tagged with the stage it happened in."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


class GenerationError(ValueError):
    pass


def generate_segments(spec: GeneratorSpec, endpoint_bc=(None, None)) -> list[SegmentGeom]:
    """Seeded random segments.

    ``z-parallel``: ``(x, y, lo) -> (x, y, hi)`` with ``x, y ~ U(lo, hi)``.
    ``uniform-random``: both endpoints uniform in ``[lo, hi]^3``; segments
    shorter than ``min_length`` are redrawn, at most ``100 * count`` draws.
    """
    rng = np.random.default_rng(spec.seed)
    out = []
    if spec.mode == "z-parallel":
        xy = rng.uniform(spec.lo, spec.hi, size=(spec.count, 2))
        for x, y in xy:
            out.append(SegmentGeom((x, y, spec.lo), (x, y, spec.hi), spec.radius, spec.ktilde, endpoint_bc))
        return out
    draws = 0
    while len(out) < spec.count:
        if draws >= 100 * spec.count:
            raise GenerationError(f"only {len(out)} of {spec.count} segments after {draws} draws")
        p = rng.uniform(spec.lo, spec.hi, size=(2, 3))
        draws += 1
        if np.linalg.norm(p[1] - p[0]) < spec.min_length:
            continue
        out.append(SegmentGeom(tuple(p[0]), tuple(p[1]), spec.radius, spec.ktilde, endpoint_bc))
    return out


def write_segments(path, segments) -> None:
    """One line per segment: ``x0 y0 z0 x1 y1 z1 R Ktilde``."""
    with open(path, "w") as fh:
        for s in segments:
            vals = (*s.p0, *s.p1, s.radius, s.ktilde)
            fh.write(" ".join(repr(float(v)) for v in vals) + "\n")


def read_segments(path, endpoint_bc=(None, None)) -> list[SegmentGeom]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 8:
                raise GenerationError(f"{path}:{lineno}: expected 8 columns, got {len(parts)}")
            v = [float(p) for p in parts]
            out.append(SegmentGeom(tuple(v[0:3]), tuple(v[3:6]), v[6], v[7], tuple(endpoint_bc)))
    return out


def config_segments(cfg: RunConfig) -> list[SegmentGeom]:
    bc = tuple(cfg.endpoint_bc)
    if cfg.generator is not None:
        return generate_segments(cfg.generator, bc)
    path = cfg.segments_path()
    if path is None:
        return []
    return read_segments(path, bc)


@dataclass
class RunReport:
    """Outcome of :func:`run`; ``summary`` holds the summary CSV row."""

    summary: dict
    tol: float
    max_iter: int | None
    converged: bool
    timings: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)
    state: object = None
    flux: object = None
    system: object = None


class _Stage:
    def __init__(self, name, timings):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        log.info("stage %s", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_summary(path, row: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        w.writerow([_fmt(row[c]) for c in SUMMARY_COLUMNS])


def write_run_info(path, cfg: RunConfig, state, timings) -> None:
    """Solver settings and outcome as ``key,value`` rows (timings make this file non-reproducible)."""
    rows = [
        ("tol", repr(cfg.tol)),
        ("max_iter", "" if cfg.max_iter is None else str(cfg.max_iter)),
        ("seed", "" if cfg.generator is None else str(cfg.generator.seed)),
        ("h", repr(cfg.h)),
        ("converged", str(state.converged)),
        ("res_rel", repr(float(state.res_rel))),
        ("restarts", str(state.restarts)),
    ]
    rows += [(f"time_{k}", f"{v:.3f}") for k, v in timings.items()]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "value"])
        w.writerows(rows)


def run(cfg: RunConfig, write: bool = True, keep: bool = False) -> RunReport:
    """mesh, segments, assembly, factorization, CG, recovery, fluxes, export.

    Errors surface as :class:`StageError` naming the failing stage.
    """
    t = {}
    with _Stage("mesh", t):
        mesh = build_box_mesh((cfg.box_lo, cfg.box_hi), cfg.h)
    with _Stage("segments", t):
        segments = config_segments(cfg)
    with _Stage("assembly", t):
        system = assemble_system(
            mesh, segments, K=cfg.conductivity, dirichlet=cfg.dirichlet,
            alpha=cfg.alpha, alpha_hat=cfg.alpha_hat, ratio=cfg.ratio,
        )
        blocks = build_blocks(system)
    with _Stage("factorization", t):
        op = ReducedOperator(blocks)
        op.d  # first block solves, so factorization problems surface here
    with _Stage("cg", t):
        state = cg_solve(op, tol=cfg.tol, max_iter=cfg.max_iter)
    with _Stage("recovery", t):
        U, uhat, _ = recover_state(op, state.X)
    with _Stage("postprocess", t):
        inlet, outlet = pressure_drop_pair(cfg.dirichlet)
        flux = boundary_fluxes(mesh, U, cfg.conductivity, inlet, outlet)
        if outlet is not None:
            drop = cfg.dirichlet[inlet] - cfg.dirichlet[outlet]
            axis = FACE_TAGS.index(outlet) // 2
            flux.keq = equivalent_transmissivity(flux, drop, float(mesh.box_edges[axis]))
        n_x = system.Nphi + system.Npsi
        row = {
            "N": system.N, "Nhat": system.Nhat, "Nphi": system.Nphi, "Npsi": system.Npsi,
            "cg_iters": state.iterations,
            "iter_ratio": state.iterations / n_x if n_x else 0.0,
        }
        row.update(flux.as_row())
    paths = {}
    if write:
        with _Stage("export", t):
            out = Path(cfg.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            paths["summary"] = out / "summary.csv"
            write_summary(paths["summary"], row)
            paths["flux"] = out / "flux.csv"
            write_flux_csv(paths["flux"], flux)
            paths["history"] = out / "history.csv"
            state.write_history(paths["history"])
            paths["info"] = out / "run_info.csv"
            write_run_info(paths["info"], cfg, state, t)
            if cfg.write_fields:
                export_fields(system, U, uhat, state.phi, state.psi, out)
                paths["fields"] = out
    report = RunReport(summary=row, tol=cfg.tol, max_iter=cfg.max_iter, converged=state.converged,
                       timings=t, paths=paths, flux=flux)
    if keep:
        report.state = state
        report.system = system
    return report


__all__ = [
    "GenerationError",
    "RunReport",
    "SUMMARY_COLUMNS",
    "StageError",
    "config_segments",
    "generate_segments",
    "read_segments",
    "run",
    "write_run_info",
    "write_segments",
    "write_summary",
]
