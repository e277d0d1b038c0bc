"""Experiment configuration: a small ``key = value`` grammar.

Grammar
-------
* ``# ...`` starts a comment (anywhere on a line).
* ``[section]`` opens a section; keys may also appear before any section.
* ``key = value`` where value is a bare word, a number, ``true``/``false``,
  ``none``, a double-quoted string, or a list ``[v1, v2, ...]`` of those.
* A scalar given for a list-valued key is treated as a one-element list.

Keys are unique across sections, so a flat file without headers is valid;
a key placed under the wrong section header is an error.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

EXPERIMENTS = ("scan", "collapse", "purification", "noise_estimate", "unequal_rates",
               "replica_verify")
DEFAULT_OBSERVABLES = {
    "scan": ("i3",),
    "collapse": ("i3",),
    "purification": ("cee_full",),
    "noise_estimate": ("cee_half",),
    "unequal_rates": ("i3",),
    "replica_verify": (),
}


class ConfigError(ValueError):
    def __init__(self, msg: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{' at '.join(where)}: {msg}" if where else msg)
        self.key = key
        self.line = line


# key -> (section, type, is_list)
SCHEMA = {
    "experiment": ("experiment", str, False),
    "geometry": ("circuit", str, False),
    "depth": ("circuit", int, False),
    "depth_factor": ("circuit", int, False),
    "initial": ("circuit", str, False),
    "event_order": ("circuit", str, True),
    "layer_order": ("circuit", str, True),
    "partition": ("circuit", str, False),
    "record": ("circuit", str, False),
    "channels": ("circuit", str, True),
    "qe_channels": ("circuit", str, True),
    "L": ("sweep", int, True),
    "p": ("sweep", float, True),
    "q": ("sweep", float, True),
    "ratio": ("sweep", float, True),
    "q_n": ("sweep", float, True),
    "q_e": ("sweep", float, True),
    "n_realizations": ("run", int, False),
    "seed": ("run", int, False),
    "threads": ("run", str, False),
    "output": ("run", str, False),
    "observables": ("run", str, True),
    "deterministic_timing": ("run", bool, False),
    "chunk": ("run", int, False),
    "poly_order": ("collapse", int, False),
    "threshold": ("collapse", float, False),
    "observable": ("collapse", str, False),
    "input": ("collapse", str, False),
    "weighted": ("collapse", bool, False),
    "fit_degree": ("noise", int, False),
    "Q": ("replica", int, True),
    "d": ("replica", int, False),
    "bond_p": ("replica", float, False),
    "bond_q": ("replica", float, False),
}
SECTIONS = sorted({v[0] for v in SCHEMA.values()})


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration (all defaults applied)."""

    experiment: str
    geometry: str = "square"
    depth: int | None = None
    depth_factor: int = 10
    initial: str | None = None
    event_order: tuple = ("measure", "noise", "qe")
    layer_order: tuple = ("h_even", "h_odd", "v_even", "v_odd")
    partition: str = "strips"
    record: str | None = None
    channels: tuple = ("dephasing",)
    qe_channels: tuple | None = None
    L: tuple = (8,)
    p: tuple = (0.0,)
    q: tuple = (0.0,)
    ratio: tuple = (0.5,)
    q_n: tuple | None = None
    q_e: tuple | None = None
    n_realizations: int = 2000
    seed: int = 0
    threads: str = "auto"
    output: str = "results"
    observables: tuple | None = None
    deterministic_timing: bool = False
    chunk: int = 50
    poly_order: int = 12
    threshold: float = 1.01
    observable: str = "i3"
    input: str | None = None
    weighted: bool = False
    fit_degree: int = 2
    Q: tuple = (2, 3)
    d: int = 2
    bond_p: float = 0.3
    bond_q: float = 0.2

    # -------------------------------------------------------------- derived
    def depth_for(self, L: int) -> int:
        if self.depth is not None:
            return self.depth
        if self.experiment == "purification":
            return L
        return self.depth_factor * L

    def initial_state(self) -> str:
        if self.initial is not None:
            return self.initial
        return "maximally_mixed" if self.experiment == "purification" else "pure_zero"

    def record_mode(self) -> str:
        if self.record is not None:
            return self.record
        return "L" if self.experiment == "purification" else "last"

    def observable_names(self) -> tuple:
        if self.observables is not None:
            return self.observables
        return DEFAULT_OBSERVABLES[self.experiment]

    def rate_pairs(self) -> list[tuple[float, float]]:
        """(q_n, q_e) grid: explicit pairs when given, else q * (ratio, 1 - ratio)."""
        if self.q_n is not None:
            return list(zip(self.q_n, self.q_e))
        return [(q * r, q * (1 - r)) for q in self.q for r in self.ratio]

    def thread_count(self) -> int:
        import os

        if self.threads == "auto":
            return max(1, os.cpu_count() or 1)
        return int(self.threads)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    def hash(self) -> str:
        """Digest of everything that affects simulated values."""
        d = self.to_dict()
        for k in ("threads", "output", "deterministic_timing"):
            d.pop(k)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _convert(raw: str, typ, key: str, line: int):
    s = raw.strip()
    if s.startswith('"') and s.endswith('"') and len(s) >= 2:
        if typ is not str:
            raise ConfigError(f"expected {typ.__name__}, got string {s}", key, line)
        return s[1:-1]
    if s.lower() == "none":
        return None
    try:
        if typ is bool:
            if s.lower() in ("true", "yes", "1"):
                return True
            if s.lower() in ("false", "no", "0"):
                return False
            raise ValueError
        if typ is int:
            return int(s)
        if typ is float:
            return float(s)
    except ValueError:
        raise ConfigError(f"expected {typ.__name__}, got {s!r}", key, line) from None
    return s


def _split_list(s: str, key: str, line: int) -> list[str]:
    inner = s.strip()[1:-1].strip()
    if "[" in inner or "]" in inner:
        raise ConfigError("nested lists are not supported", key, line)
    return [] if not inner else [v.strip() for v in inner.split(",")]


def _strip_comment(text: str) -> str:
    out, quoted = [], False
    for ch in text:
        if ch == '"':
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate a configuration document."""
    values: dict = {}
    lines: dict = {}
    section = None
    for no, rawline in enumerate(text.splitlines(), start=1):
        s = _strip_comment(rawline).strip()
        if not s:
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError(f"malformed section header {s!r}", None, no)
            section = s[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", None, no)
            continue
        if "=" not in s:
            raise ConfigError(f"expected 'key = value', got {s!r}", None, no)
        key, val = (t.strip() for t in s.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError("unknown key", key, no)
        sec, typ, is_list = SCHEMA[key]
        if section is not None and sec != section and sec != "experiment":
            raise ConfigError(f"belongs in section [{sec}], found in [{section}]", key, no)
        if key in values:
            raise ConfigError("duplicate key", key, no)
        if val.startswith("["):
            if not val.endswith("]"):
                raise ConfigError("unterminated list", key, no)
            if not is_list:
                raise ConfigError("expected a scalar, got a list", key, no)
            conv = tuple(_convert(v, typ, key, no) for v in _split_list(val, key, no))
        else:
            if key == "threads" or key == "record":
                conv = val.strip().strip('"')
            else:
                conv = _convert(val, typ, key, no)
            if is_list and conv is not None:
                conv = (conv,)
        values[key] = conv
        lines[key] = no
    if overrides:
        for k, v in overrides.items():
            if v is not None:
                values[k] = v
    return validate(values, lines)


def validate(values: dict, lines: dict | None = None) -> ExperimentConfig:
    lines = lines or {}

    def err(msg, key):
        return ConfigError(msg, key, lines.get(key))

    if "experiment" not in values:
        raise ConfigError("missing required key", "experiment")
    if values["experiment"] not in EXPERIMENTS:
        raise err(f"unknown experiment {values['experiment']!r}; expected one of {EXPERIMENTS}",
                  "experiment")
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    for key in ("p", "q", "ratio", "q_n", "q_e"):
        for v in getattr(cfg, key) or ():
            if v is None or not 0.0 <= v <= 1.0:
                raise err(f"probability out of range: {v}", key)
    if cfg.geometry not in ("chain", "square"):
        raise err(f"unknown geometry {cfg.geometry!r}", "geometry")
    for L in cfg.L:
        if L < 2 or L % 2:
            raise err(f"L = {L}: sizes must be even and at least 2", "L")
    if cfg.experiment not in ("replica_verify",):
        for key in ("L", "p"):
            if not getattr(cfg, key):
                raise err("sweep list must be non-empty", key)
    if (cfg.q_n is None) != (cfg.q_e is None):
        raise err("q_n and q_e must be given together", "q_n" if cfg.q_n is not None else "q_e")
    if cfg.q_n is not None and len(cfg.q_n) != len(cfg.q_e):
        raise err("q_n and q_e lists must have equal length", "q_n")
    for q_n, q_e in cfg.rate_pairs():
        if q_n > 1 or q_e > 1:
            raise err("probability out of range", "q")
    if cfg.n_realizations < 1:
        raise err("n_realizations must be at least 1", "n_realizations")
    if cfg.depth is not None and cfg.depth < 1:
        raise err("depth must be at least 1", "depth")
    if cfg.chunk < 1:
        raise err("chunk must be at least 1", "chunk")
    if cfg.threads != "auto":
        try:
            if int(cfg.threads) < 1:
                raise ValueError
        except ValueError:
            raise err(f"threads must be a positive integer or 'auto', got {cfg.threads!r}",
                      "threads") from None
    rec = cfg.record
    if rec is not None and rec not in ("all", "last", "L"):
        try:
            int(rec)
        except ValueError:
            raise err(f"record must be all, last, L or a step number, got {rec!r}",
                      "record") from None
    for name in cfg.observable_names():
        if name not in ("i3", "cee_half", "cee_full"):
            raise err(f"unknown observable {name!r}", "observables")
    kinds = ("dephasing", "resetting", "depolarizing")
    for key in ("channels", "qe_channels"):
        for k in getattr(cfg, key) or ():
            if k not in kinds:
                raise err(f"unknown channel kind {k!r}", key)
    if cfg.qe_channels is not None and len(cfg.qe_channels) != len(cfg.channels):
        raise err("qe_channels must pair one-to-one with channels", "qe_channels")
    if cfg.threshold < 1.0:
        raise err("threshold factor must be at least 1", "threshold")
    if cfg.poly_order < 1:
        raise err("poly_order must be positive", "poly_order")
    return cfg


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return f'"{v}"' if (not v or any(c in v for c in ' #,[]"=')) else v
    return str(v)


def serialize(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` (non-default values only)."""
    default = ExperimentConfig(experiment=cfg.experiment)
    out = [f"experiment = {cfg.experiment}"]
    for sec in SECTIONS:
        keys = [k for k, (s, _, _) in SCHEMA.items() if s == sec and k != "experiment"]
        body = []
        for k in keys:
            v = getattr(cfg, k)
            if v == getattr(default, k):
                continue
            if isinstance(v, tuple):
                body.append(f"{k} = [{', '.join(_fmt(x) for x in v)}]")
            else:
                body.append(f"{k} = {_fmt(v)}")
        if body:
            out.append(f"\n[{sec}]")
            out.extend(body)
    return "\n".join(out) + "\n"


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), overrides)


__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "serialize", "load_config",
           "validate"]
