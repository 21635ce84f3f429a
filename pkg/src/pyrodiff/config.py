"""Flat dotted-key configuration files.

The format is one ``key = value`` pair per line, ``#`` starts a comment,
keys are dotted lowercase identifiers (``grid.N``, ``model.kappa``).
Values stay strings until a typed accessor converts them; conversion
failures and missing required keys raise ``ConfigError`` naming the key,
which the command line maps to its configuration exit code.
"""

from __future__ import annotations

import re

from .errors import ConfigError

__all__ = ["RunConfig", "parse_config", "load_config"]

_KEY_RE = re.compile(r"^[A-Za-z0-9_.-]+$")
_MISSING = object()


def parse_config(text: str) -> dict:
    """Parse config text into an ordered {key: value} dict of strings."""
    data = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"line {lineno}: malformed key {key!r}")
        if key in data:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        data[key] = value
    return data


class RunConfig:
    """Typed access to a flat key/value configuration."""

    def __init__(self, data: dict):
        self._data = dict(data)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        return cls(parse_config(text))

    def keys(self):
        return self._data.keys()

    def ensure_known(self, known) -> None:
        unknown = sorted(set(self._data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    def get(self, key: str, default=_MISSING) -> str:
        if key in self._data:
            return self._data[key]
        if default is _MISSING:
            raise ConfigError(f"missing required config key {key!r}")
        return default

    def _convert(self, key, conv, default, kind):
        raw = self.get(key, default)
        if raw is default and key not in self._data:
            return default
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r}: expected {kind}, "
                              f"got {raw!r}") from exc

    def get_float(self, key: str, default=_MISSING) -> float:
        return self._convert(key, float, default, "a number")

    def get_int(self, key: str, default=_MISSING) -> int:
        def conv(raw):
            f = float(raw)
            i = int(f)
            if i != f:
                raise ValueError(raw)
            return i

        return self._convert(key, conv, default, "an integer")

    def get_bool(self, key: str, default=_MISSING) -> bool:
        def conv(raw):
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)

        return self._convert(key, conv, default, "a boolean")

    def get_floats(self, key: str, default=_MISSING) -> tuple:
        def conv(raw):
            parts = [p for p in str(raw).split(",") if p.strip()]
            if not parts:
                raise ValueError(raw)
            return tuple(float(p) for p in parts)

        return self._convert(key, conv, default, "a comma-separated number list")


def load_config(path: str) -> RunConfig:
    return RunConfig.from_file(path)
