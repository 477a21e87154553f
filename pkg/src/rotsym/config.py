"""Sectioned key-value experiment configuration (INI syntax).

Example::

    [profile]
    kind = hyperbolic
    alpha = 1.0

    [run]
    n = 3
    seed = 20240917
    output = out/solve.csv

    [grid]
    r_max = 20
    num_points = 2048

Sections other than ``profile`` and ``run`` are command-specific blocks; their
values stay as strings and are parsed by the typed getters.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field

from rotsym.manifold import ProfileError, WarpProfile, profile_from_dict
from rotsym.resolvent import DEFAULT_SEED

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]


class ConfigError(ValueError):
    """Invalid or incomplete configuration (CLI exit code 2)."""


_LIST_KEYS = {"coeffs"}


@dataclass(frozen=True)
class ExperimentConfig:
    profile: dict
    n: int
    seed: int = DEFAULT_SEED
    output: str = ""
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 3:
            raise ConfigError(f"dimension n must be >= 3, got {self.n}")
        if "kind" not in self.profile:
            raise ConfigError("[profile] needs a kind")
        # values are kept in their text form so that the text round trip is exact
        object.__setattr__(self, "profile", {str(k): _text(v) for k, v in self.profile.items()})
        object.__setattr__(self, "blocks", {
            str(name): {str(k): _text(v) for k, v in block.items()} for name, block in self.blocks.items()})

    # -- text round trip ------------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        if not parser.has_section("profile"):
            raise ConfigError("missing [profile] section")
        if not parser.has_section("run"):
            raise ConfigError("missing [run] section")
        run = dict(parser["run"])
        try:
            n = int(run.pop("n"))
        except KeyError:
            raise ConfigError("[run] needs n") from None
        except ValueError as exc:
            raise ConfigError(f"[run] n: {exc}") from exc
        try:
            seed = int(run.pop("seed", DEFAULT_SEED))
        except ValueError as exc:
            raise ConfigError(f"[run] seed: {exc}") from exc
        output = run.pop("output", "")
        if run:
            raise ConfigError(f"unknown [run] keys: {', '.join(sorted(run))}")
        blocks = {name: dict(parser[name]) for name in parser.sections() if name not in ("profile", "run")}
        return cls(dict(parser["profile"]), n, seed, output, blocks)

    def to_text(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser["profile"] = {k: str(v) for k, v in self.profile.items()}
        run = {"n": str(self.n), "seed": str(self.seed)}
        if self.output:
            run["output"] = self.output
        parser["run"] = run
        for name in sorted(self.blocks):
            parser[name] = {k: str(v) for k, v in self.blocks[name].items()}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical text form."""
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    # -- typed access ---------------------------------------------------

    def build_profile(self) -> WarpProfile:
        d = {}
        for k, v in self.profile.items():
            if k in _LIST_KEYS:
                d[k] = [x for x in (s.strip() for s in str(v).split(",")) if x]
            else:
                d[k] = v
        try:
            return profile_from_dict(d)
        except (ProfileError, ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"bad [profile]: {exc}") from exc

    def _raw(self, section, key, default):
        block = self.blocks.get(section, {})
        if key in block:
            return block[key]
        if default is _REQUIRED:
            raise ConfigError(f"[{section}] needs {key}")
        return default

    def get_float(self, section: str, key: str, default=None):
        raw = self._raw(section, key, _REQUIRED if default is None else default)
        try:
            return float(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from exc

    def get_int(self, section: str, key: str, default=None) -> int:
        raw = self._raw(section, key, _REQUIRED if default is None else default)
        try:
            return int(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}") from exc

    def get_str(self, section: str, key: str, default=None) -> str:
        return str(self._raw(section, key, _REQUIRED if default is None else default)).strip()

    def get_bool(self, section: str, key: str, default: bool | None = None) -> bool:
        raw = self._raw(section, key, _REQUIRED if default is None else default)
        if isinstance(raw, bool):
            return raw
        val = str(raw).strip().lower()
        if val in ("1", "true", "yes", "on"):
            return True
        if val in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{section}] {key}: expected a boolean, got {raw!r}")

    def get_floats(self, section: str, key: str, default=None) -> list[float]:
        raw = self._raw(section, key, _REQUIRED if default is None else default)
        if not isinstance(raw, str):
            return [float(x) for x in raw]
        try:
            return [float(x) for x in raw.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: expected comma-separated numbers, got {raw!r}") from exc

    def has(self, section: str, key: str | None = None) -> bool:
        if section not in self.blocks:
            return False
        return key is None or key in self.blocks[section]


_REQUIRED = object()


def _text(v) -> str:
    if isinstance(v, str):
        return v.strip()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ", ".join(_text(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_text(text)
