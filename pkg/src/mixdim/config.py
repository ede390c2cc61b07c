"""Run configuration: an INI-style file with sections.

::

    [domain]
    box_lo = -1 -1 -1
    box_hi = 1 1 1
    h = 0.05
    K = 1                 # scalar, or three diagonal entries

    [boundary]            # every face: a number (Dirichlet) or "neumann"
    x- = neumann
    ...
    z+ = 1

    [segments]            # either a file ...
    file = segments.txt
    endpoint_bc = neumann # or "v0 v1" Dirichlet values at s=0 and s=S

    [generator]           # ... or a seeded generator
    count = 40
    mode = z-parallel     # or uniform-random
    lo = -0.8
    hi = 0.8
    radius = 0.01
    ktilde = 100
    seed = 1
    min_length = 0.05

    [solver]
    alpha = 1
    alpha_hat = 1
    tol = 1e-6
    max_iter = 100000
    ratio = 0.5

    [output]
    dir = out
    fields = yes
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

from .mesh import FACE_TAGS


class ConfigError(ValueError):
    pass


MODES = ("z-parallel", "uniform-random")


@dataclass(frozen=True)
class GeneratorSpec:
    count: int
    seed: int
    mode: str = "z-parallel"
    lo: float = -0.8
    hi: float = 0.8
    radius: float = 1e-2
    ktilde: float = 1e2
    min_length: float = 0.05

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"generator mode must be one of {MODES}, got {self.mode!r}")
        if self.count < 0:
            raise ConfigError("generator count must be non-negative")
        if not self.hi > self.lo:
            raise ConfigError("generator bounds must satisfy lo < hi")


@dataclass(frozen=True)
class RunConfig:
    box_lo: tuple = (-1.0, -1.0, -1.0)
    box_hi: tuple = (1.0, 1.0, 1.0)
    h: float = 0.1
    K: tuple = (1.0,)
    boundary: tuple = (("x-", None), ("x+", None), ("y-", None), ("y+", None), ("z-", 0.0), ("z+", 1.0))
    segments_file: str | None = None
    endpoint_bc: tuple = (None, None)
    generator: GeneratorSpec | None = None
    alpha: float = 1.0
    alpha_hat: float = 1.0
    tol: float = 1e-6
    max_iter: int | None = None
    ratio: float = 0.5
    out_dir: str = "out"
    write_fields: bool = True
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        tags = [t for t, _ in self.boundary]
        if sorted(tags) != sorted(FACE_TAGS):
            raise ConfigError(f"boundary must configure exactly the faces {FACE_TAGS}")
        if all(v is None for _, v in self.boundary):
            raise ConfigError("at least one face needs a Dirichlet value")
        if self.segments_file is not None and self.generator is not None:
            raise ConfigError("give either a segment file or a generator, not both")
        if not self.h > 0 or not self.tol > 0 or not self.alpha > 0 or not self.alpha_hat > 0:
            raise ConfigError("h, tol, alpha and alpha_hat must be positive")
        if len(self.K) not in (1, 3) or min(self.K) <= 0:
            raise ConfigError("K must be one positive value or three")

    @property
    def dirichlet(self) -> dict:
        return {t: v for t, v in self.boundary if v is not None}

    @property
    def conductivity(self):
        return self.K[0] if len(self.K) == 1 else tuple(self.K)

    def segments_path(self) -> Path | None:
        if self.segments_file is None:
            return None
        p = Path(self.segments_file)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "seed" in kw:
            seed = kw.pop("seed")
            if self.generator is None:
                raise ConfigError("--seed given but the config has no generator")
            kw["generator"] = replace(self.generator, seed=int(seed))
        return replace(self, **kw)


def _floats(text, n=None, what="value"):
    try:
        vals = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{what}: cannot parse {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"{what}: expected {n} numbers, got {text!r}")
    return vals


def _bc_value(text, what):
    text = text.strip().lower()
    if text in ("neumann", "none", ""):
        return None
    return _floats(text, 1, what)[0]


def _fmt(v) -> str:
    return repr(float(v))


def parse_config(text: str, base_dir=".") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    known = {"domain", "boundary", "segments", "generator", "solver", "output"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown sections {sorted(extra)}")
    kw = {"base_dir": str(base_dir)}
    try:
        if cp.has_section("domain"):
            d = cp["domain"]
            if "box_lo" in d:
                kw["box_lo"] = _floats(d["box_lo"], 3, "box_lo")
            if "box_hi" in d:
                kw["box_hi"] = _floats(d["box_hi"], 3, "box_hi")
            if "h" in d:
                kw["h"] = d.getfloat("h")
            if "K" in d:
                kw["K"] = _floats(d["K"], None, "K")
        if cp.has_section("boundary"):
            b = cp["boundary"]
            unknown = set(b) - set(FACE_TAGS)
            if unknown:
                raise ConfigError(f"unknown faces {sorted(unknown)}")
            missing = set(FACE_TAGS) - set(b)
            if missing:
                raise ConfigError(f"boundary section misses faces {sorted(missing)}")
            kw["boundary"] = tuple((t, _bc_value(b[t], t)) for t in FACE_TAGS)
        if cp.has_section("segments"):
            s = cp["segments"]
            if "file" in s:
                kw["segments_file"] = s["file"]
            if "endpoint_bc" in s:
                text = s["endpoint_bc"].strip().lower()
                kw["endpoint_bc"] = (None, None) if text == "neumann" else _floats(text, 2, "endpoint_bc")
        if cp.has_section("generator"):
            g = cp["generator"]
            if "seed" not in g:
                raise ConfigError("generator needs a seed")
            kw["generator"] = GeneratorSpec(
                count=g.getint("count"),
                seed=g.getint("seed"),
                mode=g.get("mode", "z-parallel"),
                lo=g.getfloat("lo", -0.8),
                hi=g.getfloat("hi", 0.8),
                radius=g.getfloat("radius", 1e-2),
                ktilde=g.getfloat("ktilde", 1e2),
                min_length=g.getfloat("min_length", 0.05),
            )
        if cp.has_section("solver"):
            s = cp["solver"]
            for key in ("alpha", "alpha_hat", "tol", "ratio"):
                if key in s:
                    kw[key] = s.getfloat(key)
            if "max_iter" in s:
                kw["max_iter"] = s.getint("max_iter")
        if cp.has_section("output"):
            o = cp["output"]
            if "dir" in o:
                kw["out_dir"] = o["dir"]
            if "fields" in o:
                kw["write_fields"] = o.getboolean("fields")
    except (ValueError, TypeError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return RunConfig(**kw)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)


def dump_config(cfg: RunConfig) -> str:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["domain"] = {
        "box_lo": " ".join(_fmt(v) for v in cfg.box_lo),
        "box_hi": " ".join(_fmt(v) for v in cfg.box_hi),
        "h": _fmt(cfg.h),
        "K": " ".join(_fmt(v) for v in cfg.K),
    }
    cp["boundary"] = {t: ("neumann" if v is None else _fmt(v)) for t, v in cfg.boundary}
    seg = {}
    if cfg.segments_file is not None:
        seg["file"] = cfg.segments_file
    seg["endpoint_bc"] = "neumann" if cfg.endpoint_bc == (None, None) else " ".join(_fmt(v) for v in cfg.endpoint_bc)
    cp["segments"] = seg
    if cfg.generator is not None:
        g = cfg.generator
        cp["generator"] = {
            "count": str(g.count), "seed": str(g.seed), "mode": g.mode, "lo": _fmt(g.lo), "hi": _fmt(g.hi),
            "radius": _fmt(g.radius), "ktilde": _fmt(g.ktilde), "min_length": _fmt(g.min_length),
        }
    solver = {"alpha": _fmt(cfg.alpha), "alpha_hat": _fmt(cfg.alpha_hat), "tol": _fmt(cfg.tol), "ratio": _fmt(cfg.ratio)}
    if cfg.max_iter is not None:
        solver["max_iter"] = str(cfg.max_iter)
    cp["solver"] = solver
    cp["output"] = {"dir": cfg.out_dir, "fields": "yes" if cfg.write_fields else "no"}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


__all__ = ["ConfigError", "GeneratorSpec", "RunConfig", "dump_config", "load_config", "parse_config"]
