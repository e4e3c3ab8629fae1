"""Flat ``key = value`` configuration for the benchmark front end.

Grammar, one entry per line::

    # comment
    key = value
    key = v1, v2, v3        (list-valued keys)

Blank lines and lines starting with ``#`` are ignored. Keys are the field
names of :class:`Config`; unknown keys and lines without ``=`` are errors
reported with their line number. Numbers are parsed with ``int``/``float``,
which do not depend on the locale.
"""

import dataclasses
import hashlib
from dataclasses import dataclass, fields

from hdreg import bench, noise, problems
from hdreg.errors import InvalidInputError

FORMATS = ("csv", "json", "md")


class ConfigError(InvalidInputError):
    pass


@dataclass(frozen=True)
class Config:
    problems: tuple = problems.PROBLEMS
    dims: tuple = bench.DEFAULT_DIMS
    snrs: tuple = bench.DEFAULT_SNRS
    laws: tuple = bench.DEFAULT_LAWS
    runs: int = 100
    tau: float = 1.5
    seed: int = 0
    noise_basis: str = "spectral"
    output_dir: str = "."
    formats: tuple = ("csv", "json")
    workers: int = 1

    def validate(self):
        if any(p not in problems.PROBLEMS for p in self.problems):
            raise ConfigError(f"unknown problem in {self.problems}")
        if any(law not in noise.LAWS for law in self.laws):
            raise ConfigError(f"unknown noise law in {self.laws}")
        if any(f not in FORMATS for f in self.formats):
            raise ConfigError(f"unknown format in {self.formats}; choose from {FORMATS}")
        if self.noise_basis not in noise.BASES:
            raise ConfigError(f"unknown noise basis {self.noise_basis!r}")
        if self.runs < 1 or self.workers < 1:
            raise ConfigError("runs and workers must be at least 1")
        if not self.tau > 1:
            raise ConfigError("tau must exceed 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if any(not s > 0 for s in self.snrs):
            raise ConfigError("SNR values must be positive")
        return self


def _strs(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


_PARSERS = {
    "problems": _strs,
    "dims": lambda s: tuple(int(v) for v in _strs(s)),
    "snrs": lambda s: tuple(float(v) for v in _strs(s)),
    "laws": _strs,
    "runs": int,
    "tau": float,
    "seed": int,
    "noise_basis": str.strip,
    "output_dir": str.strip,
    "formats": _strs,
    "workers": int,
}


def _render(value):
    if isinstance(value, tuple):
        return ", ".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text, source="<string>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    return Config(**values).validate()


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def dumps(config):
    return "".join(f"{f.name} = {_render(getattr(config, f.name))}\n" for f in fields(config))


def save_config(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(config))


def override(config, **flags):
    """Replace every field whose flag value is not None."""
    given = {k: v for k, v in flags.items() if v is not None}
    return dataclasses.replace(config, **given).validate()


# fields that do not affect results are left out of the provenance hash
_UNHASHED = ("output_dir", "formats", "workers")


def config_hash(config):
    body = dumps(dataclasses.replace(config, **{k: getattr(Config, k) for k in _UNHASHED}))
    return hashlib.sha256(body.encode()).hexdigest()[:12]
