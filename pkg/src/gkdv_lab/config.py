"""Experiment configuration as a sectioned ``key = value`` file.

Floats are written with ``repr`` so a write/read cycle is lossless; ``none``
marks knobs that are resolved from the model (see ``resolve``).
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, fields, replace

from .experiments import PdeSetup, default_setup
from .profiles import ModelParams, PotentialSpec

_SECTIONS = {
    "model": ("m", "lam", "eps", "gamma"),
    "pde": ("L", "N", "dt", "x0", "x_exit", "horizon", "monitor_every", "sponge_width", "sponge_strength", "scheme"),
    "ode": ("ode_dt", "kappa"),
    "output": ("out", "tol", "workers"),
}
_KEY_ALIASES = {"lambda": "lam"}


@dataclass(frozen=True)
class ExperimentConfig:
    m: int = 3
    lam: float = 0.6
    eps: float = 0.05
    gamma: float = 1.0
    L: float | None = None
    N: int | None = None
    dt: float | None = None
    x0: float | None = None
    x_exit: float | None = None
    horizon: float | None = None
    monitor_every: int | None = None
    sponge_width: float | None = None
    sponge_strength: float | None = None
    scheme: str = "etdrk4"
    ode_dt: float | None = None
    kappa: float | None = None
    out: str = "out"
    tol: float | None = None
    workers: int = 1

    def __post_init__(self):
        self.params()  # validates the physical constraints

    def params(self) -> ModelParams:
        return ModelParams(self.m, self.lam, self.eps, PotentialSpec(self.gamma))

    def resolve(self) -> "ExperimentConfig":
        """Fill every unset numerical knob with its model-derived default."""
        base = default_setup(self.params(), self.dt) if self.dt is not None else default_setup(self.params())
        updates = {}
        for f in fields(PdeSetup):
            if f.name == "scheme":
                continue
            if getattr(self, f.name) is None:
                updates[f.name] = getattr(base, f.name)
        return replace(self, **updates)

    def setup(self) -> PdeSetup:
        r = self.resolve()
        return PdeSetup(
            L=float(r.L),
            N=int(r.N),
            dt=float(r.dt),
            x0=float(r.x0),
            x_exit=float(r.x_exit),
            horizon=float(r.horizon),
            sponge_width=float(r.sponge_width),
            sponge_strength=float(r.sponge_strength),
            monitor_every=int(r.monitor_every),
            scheme=r.scheme,
        )

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        for sec, keys in _SECTIONS.items():
            cp[sec] = {("lambda" if k == "lam" else k): _fmt(getattr(self, k)) for k in keys}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp.read_string(text)
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for sec in cp.sections():
            if sec not in _SECTIONS:
                raise ValueError(f"unknown section [{sec}]")
            for key, raw in cp[sec].items():
                name = _KEY_ALIASES.get(key, key)
                if name not in _SECTIONS[sec]:
                    raise ValueError(f"unknown key {key!r} in [{sec}]")
                values[name] = _parse(raw, types[name])
        return cls(**values)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(raw: str, typ: str):
    raw = raw.strip()
    if raw.lower() == "none":
        if "None" not in typ:
            raise ValueError(f"value required, got {raw!r}")
        return None
    if typ.startswith("int"):
        return int(raw)
    if typ.startswith("float"):
        return float(raw)
    return raw


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_ini(fh.read())


def save(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cfg.to_ini())


__all__ = ["ExperimentConfig", "load", "save"]
