"""Instance configuration files.

One INI file describes one problem instance.  Sections and keys::

    [instance]      name, seed
    [nfunctions]    <label> = <spec>     e.g. phi = exp_family(5)
    [grid]          T, N, d
    [lagrangian]    name, plus registry parameters (e.g. sigma)
    [hypotheses]    phi, phi0, phi1, psi1, nu, b1, b2, radii, threshold,
                    x_max, y_max, random
    [solver]        tol, max_iter, method, memory, init, mean_radius
    [analyze]       functions, pairs
    [verify]        samples
    [output]        dir

N-function entries in ``[hypotheses]`` and ``[analyze]`` may name a label
from ``[nfunctions]`` or give a spec inline.  ``radii`` is
``lo_exp, hi_exp, count`` for a base-10 log grid.  Unknown sections or keys
are errors, reported with the line number of the offending entry.
"""
from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import BadParam, ConfigError
from .lagrangians import REGISTRY
from .nfunction import NFunction, parse_nfunction

_SCHEMA = {
    "instance": {"name", "seed"},
    "nfunctions": None,  # free labels
    "grid": {"t", "n", "d"},
    "lagrangian": None,  # name plus registry parameters
    "hypotheses": {"phi", "phi0", "phi1", "psi1", "nu", "b1", "b2", "radii", "threshold",
                   "x_max", "y_max", "random"},
    "solver": {"tol", "max_iter", "method", "memory", "init", "mean_radius"},
    "analyze": {"functions", "pairs"},
    "verify": {"samples"},
    "output": {"dir"},
}


@dataclass
class InstanceConfig:
    name: str = "instance"
    seed: int = 0
    nfunctions: dict = field(default_factory=dict)
    T: float = 1.0
    N: int = 256
    d: int = 1
    lagrangian: Optional[str] = None
    lagrangian_params: dict = field(default_factory=dict)
    hypotheses: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    analyze_functions: list = field(default_factory=list)
    analyze_pairs: list = field(default_factory=list)
    verify_samples: int = 10_000
    out_dir: Optional[str] = None
    source: str = ""

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.source.encode("utf-8")).hexdigest()


def _line_numbers(text: str) -> dict:
    """``(section, key) -> line`` for diagnostics."""
    where = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"^\[([^\]]+)\]$", line)
        if m:
            section = m.group(1).strip().lower()
            where[(section, None)] = i
            continue
        key = re.split(r"[=:]", line, 1)[0].strip().lower()
        where[(section, key)] = i
    return where


class _Reader:
    def __init__(self, parser, where, path):
        self.p = parser
        self.where = where
        self.path = path

    def fail(self, section, key, msg):
        line = self.where.get((section, key), self.where.get((section, None)))
        loc = f"{self.path}:{line}" if line else str(self.path)
        field_name = f"[{section}] {key}" if key else f"[{section}]"
        raise ConfigError(f"{loc}: {field_name}: {msg}")

    def get(self, section, key, conv, default):
        if not self.p.has_option(section, key):
            return default
        raw = self.p.get(section, key)
        try:
            return conv(raw)
        except (ValueError, BadParam) as exc:
            self.fail(section, key, f"bad value {raw!r} ({exc})")


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def parse_config(text: str, path: str = "<config>") -> InstanceConfig:
    """Parse and validate configuration text; raises :class:`ConfigError`."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    where = _line_numbers(text)
    r = _Reader(parser, where, path)
    for sec in parser.sections():
        if sec not in _SCHEMA:
            r.fail(sec, None, f"unknown section; expected one of {sorted(_SCHEMA)}")
        allowed = _SCHEMA[sec]
        if allowed is not None:
            for key in parser.options(sec):
                if key not in allowed:
                    r.fail(sec, key, f"unknown key; expected one of {sorted(allowed)}")

    cfg = InstanceConfig(source=text)
    cfg.name = r.get("instance", "name", str, cfg.name)
    cfg.seed = r.get("instance", "seed", _int, 0)
    if cfg.seed < 0:
        r.fail("instance", "seed", "must be a nonnegative integer")

    if parser.has_section("nfunctions"):
        for label in parser.options("nfunctions"):
            cfg.nfunctions[label] = r.get("nfunctions", label, parse_nfunction, None)

    def nfun(section, key, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key).strip()
        if raw.lower() in cfg.nfunctions:
            return cfg.nfunctions[raw.lower()]
        return r.get(section, key, parse_nfunction, None)

    cfg.T = r.get("grid", "t", float, cfg.T)
    cfg.N = r.get("grid", "n", _int, cfg.N)
    cfg.d = r.get("grid", "d", _int, cfg.d)
    if not cfg.T > 0:
        r.fail("grid", "t", "must be positive")
    if cfg.N < 8:
        r.fail("grid", "n", "must be at least 8")
    if cfg.d < 1:
        r.fail("grid", "d", "must be at least 1")

    if parser.has_section("lagrangian"):
        name = r.get("lagrangian", "name", str, None)
        if name is None:
            r.fail("lagrangian", None, "missing 'name'")
        if name not in REGISTRY:
            r.fail("lagrangian", "name", f"unknown lagrangian {name!r}; known: {sorted(REGISTRY)}")
        cfg.lagrangian = name
        for key in parser.options("lagrangian"):
            if key != "name":
                cfg.lagrangian_params[key] = r.get("lagrangian", key, float, None)

    h = cfg.hypotheses
    for key in ("phi", "phi0", "phi1", "psi1"):
        v = nfun("hypotheses", key)
        if v is not None:
            h[key] = v
    if "phi" not in h and "phi" in cfg.nfunctions:
        h["phi"] = cfg.nfunctions["phi"]
    for key in ("nu", "b1", "b2", "threshold", "x_max", "y_max"):
        v = r.get("hypotheses", key, float, None)
        if v is not None:
            h[key] = v
    v = r.get("hypotheses", "random", _int, None)
    if v is not None:
        h["random"] = v

    def radii(s):
        parts = [float(x) for x in s.split(",")]
        if len(parts) != 3:
            raise ValueError("expected 'lo_exp, hi_exp, count'")
        return (parts[0], parts[1], int(parts[2]))
    v = r.get("hypotheses", "radii", radii, None)
    if v is not None:
        h["radii"] = v

    s = cfg.solver
    for key, conv in (("tol", float), ("max_iter", _int), ("memory", _int), ("mean_radius", float),
                      ("method", str), ("init", str)):
        v = r.get("solver", key, conv, None)
        if v is not None:
            s[key] = v
    if "method" in s and s["method"] not in ("lbfgs", "gradient"):
        r.fail("solver", "method", "must be 'lbfgs' or 'gradient'")
    if "init" in s and not re.match(r"^(mean|zero|constant:[-+0-9.eE]+)$", s["init"]):
        r.fail("solver", "init", "must be 'mean', 'zero' or 'constant:<value>'")

    if parser.has_option("analyze", "functions"):
        for item in _split_list(parser.get("analyze", "functions")):
            cfg.analyze_functions.append((item, _resolve(r, cfg, "analyze", "functions", item)))
    if parser.has_option("analyze", "pairs"):
        for item in _split_list(parser.get("analyze", "pairs")):
            if "<<" not in item:
                r.fail("analyze", "pairs", f"pair {item!r} must look like 'a << b'")
            a, b = (x.strip() for x in item.split("<<", 1))
            cfg.analyze_pairs.append((a, _resolve(r, cfg, "analyze", "pairs", a),
                                      b, _resolve(r, cfg, "analyze", "pairs", b)))
    cfg.verify_samples = r.get("verify", "samples", _int, cfg.verify_samples)
    cfg.out_dir = r.get("output", "dir", str, None)
    return cfg


def _split_list(raw: str) -> list:
    # commas inside parentheses belong to specs
    out, depth, cur = [], 0, ""
    for ch in raw:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        out.append(cur.strip())
    return out


def _resolve(r: _Reader, cfg: InstanceConfig, section, key, item) -> NFunction:
    if item.lower() in cfg.nfunctions:
        return cfg.nfunctions[item.lower()]
    try:
        return parse_nfunction(item)
    except BadParam as exc:
        r.fail(section, key, str(exc))


def load_config(path) -> InstanceConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))
