"""Flat ``key = value`` experiment configs with a canonical text form.

Lines starting with ``#`` and blank lines are ignored.  Values are typed by
the field they set; lists are comma separated.  ``dumps`` writes every field
in sorted key order, so ``loads(dumps(c)) == c`` and ``dumps(loads(t))`` is a
fixed point for any valid text ``t``.
"""

import dataclasses
from dataclasses import dataclass, field

from .alpha import parse_alpha
from .steps import parse_dist

KINDS = ("discrepancy-curve", "fit-exponent", "moment-check", "dioph-sum",
         "cond-check", "et-check", "gap-diagnostic", "simulate")


class ConfigError(ValueError):
    pass


def _floats(*v):
    return field(default_factory=lambda: list(v))


@dataclass
class ExperimentConfig:
    kind: str = "discrepancy-curve"
    alpha: str = "golden"
    dist: str = "twopoint:1,2,0.5"
    n_max: int = 1 << 20
    replicas: int = 16
    seed: int = 0
    workers: int = 1
    eta: float = 1e-12
    harmonics: list = field(default_factory=lambda: [1])
    # discrepancy curves
    fit_min_n: int = 1 << 10
    et: bool = False
    et_harmonics: str = "sqrt"
    tau_range: list = field(default_factory=list)
    # moments
    moment_m: int = 0
    moment_n: list = field(default_factory=lambda: [64, 128, 256, 512, 1024])
    moment_p: list = field(default_factory=lambda: [1, 2, 3])
    moment_h: list = field(default_factory=lambda: list(range(1, 17)))
    moment_replicas: int = 10000
    condition: str = "second"
    # conditions
    beta: float = 2.0
    grid_n: int = 4096
    grid2_n: int = 256
    d_max: int = 8
    # diophantine sums
    b: float = 0.5
    levels: list = field(default_factory=lambda: list(range(6, 21)))
    spread_max: float = 3.0
    slope_range: list = field(default_factory=list)
    # gap diagnostic
    gap_count: int = 3
    envelope_k: float = 0.0
    gap_min_pass: int = 14

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        try:
            parse_alpha(self.alpha)
            parse_dist(self.dist)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.n_max < 1 or self.replicas < 1:
            raise ConfigError("n_max and replicas must be positive")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.et_harmonics != "sqrt":
            try:
                if int(self.et_harmonics) < 1:
                    raise ValueError
            except ValueError:
                raise ConfigError("et_harmonics must be 'sqrt' or a positive integer") from None
        for name in ("tau_range", "slope_range"):
            v = getattr(self, name)
            if v and (len(v) != 2 or v[0] > v[1]):
                raise ConfigError(f"{name} needs two increasing numbers")

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


def _field_types():
    out = {}
    defaults = ExperimentConfig()
    for f in dataclasses.fields(ExperimentConfig):
        out[f.name] = type(getattr(defaults, f.name))
    return out


def _item_type(name):
    if name in ("tau_range", "slope_range"):
        return float
    return int


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ",".join(_format(v) for v in value)
    return str(value)


def _parse_value(name, typ, text):
    text = text.strip()
    try:
        if typ is bool:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return low in ("true", "1", "yes")
        if typ is int:
            return int(text, 0)
        if typ is float:
            return float(text)
        if typ is list:
            it = _item_type(name)
            return [it(v) for v in text.split(",") if v.strip()]
        return text
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None


def loads(text):
    types = _field_types()
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in kw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        kw[key] = _parse_value(key, types[key], val)
    return ExperimentConfig(**kw)


def dumps(cfg):
    lines = []
    for f in sorted(dataclasses.fields(cfg), key=lambda f: f.name):
        lines.append(f"{f.name} = {_format(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
