"""Model configuration files.

A model file is TOML with either explicit coefficients::

    range = 3
    hop = [[12.0, 0.0], [7.0, 28.0], [4.0, 5.0]]    # A_{0,l}, l = 0..range-1
    pair = [[-11.0, 10.0], [-3.0, 4.0]]             # B_{0,l}, l = 1..range-1

or the nearest-neighbour convenience block::

    [nn]
    gamma = 1.0
    h = 1.0
    D = 2.0

Each coefficient is a ``[re, im]`` pair (a bare number is read as real).
``range`` is optional; when given, no list may be longer than it allows.
"""
from __future__ import annotations

import re
import sys

from .model import ModelSpec, nn_model

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "parse_model", "load_model", "dump_model", "parse_nn_inline"]


class ConfigError(ValueError):
    """Invalid model configuration; ``lineno`` is 1-based or ``None``."""

    def __init__(self, message: str, lineno: int | None = None, source: str = "<config>"):
        self.lineno = lineno
        self.source = source
        where = f"{source}:{lineno}" if lineno is not None else source
        super().__init__(f"{where}: {message}")


_TOP_KEYS = {"range", "hop", "pair", "nn"}
_NN_KEYS = {"gamma", "h", "D"}


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*(\[\s*)?{re.escape(key)}\b")
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return i
    return None


def _coeff(value, key: str, idx: int, text: str, source: str) -> complex:
    ln = _line_of(text, key)
    if isinstance(value, bool):
        raise ConfigError(f"{key}[{idx}] must be numeric", ln, source)
    if isinstance(value, (int, float)):
        return complex(float(value))
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{key}[{idx}] must be a number or an [re, im] pair, got {value!r}", ln, source)


def parse_model(text: str, source: str = "<config>") -> ModelSpec:
    """Parse model configuration text into a :class:`ModelSpec`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        if m:
            line = int(m.group(1))
        elif "end of document" in str(exc):
            line = max(1, len(text.rstrip("\n").splitlines()))
        else:
            line = None
        raise ConfigError(f"syntax error: {exc}", line, source) from None

    unknown = set(data) - _TOP_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r}", _line_of(text, key), source)

    if "nn" in data:
        if set(data) - {"nn"}:
            key = sorted(set(data) - {"nn"})[0]
            raise ConfigError("nn block cannot be combined with explicit coefficients", _line_of(text, key), source)
        nn = data["nn"]
        ln = _line_of(text, "nn")
        if not isinstance(nn, dict):
            raise ConfigError("nn must be a table {gamma, h, D}", ln, source)
        bad = set(nn) - _NN_KEYS
        if bad:
            key = sorted(bad)[0]
            raise ConfigError(f"unknown nn key {key!r}", _line_of(text, key) or ln, source)
        vals = {}
        for key in ("gamma", "h", "D"):
            v = nn.get(key, 0.0)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"nn.{key} must be a real number", _line_of(text, key) or ln, source)
            vals[key] = float(v)
        if not 0.0 <= vals["gamma"] <= 1.0:
            raise ConfigError("nn.gamma must lie in [0, 1]", _line_of(text, "gamma") or ln, source)
        return nn_model(vals["gamma"], vals["h"], vals["D"])

    if "hop" not in data:
        raise ConfigError("missing required key 'hop'", None, source)
    hop_raw, pair_raw = data["hop"], data.get("pair", [])
    for key, raw in (("hop", hop_raw), ("pair", pair_raw)):
        if not isinstance(raw, list):
            raise ConfigError(f"{key} must be a list of [re, im] pairs", _line_of(text, key), source)
    hop = [_coeff(v, "hop", i, text, source) for i, v in enumerate(hop_raw)]
    pair = [_coeff(v, "pair", i + 1, text, source) for i, v in enumerate(pair_raw)]
    if not hop:
        raise ConfigError("hop must contain at least hop[0]", _line_of(text, "hop"), source)

    if "range" in data:
        n0 = data["range"]
        ln = _line_of(text, "range")
        if isinstance(n0, bool) or not isinstance(n0, int) or n0 < 1:
            raise ConfigError("range must be a positive integer", ln, source)
        if len(hop) > n0:
            raise ConfigError(f"hop has {len(hop)} entries but range = {n0} allows {n0}", _line_of(text, "hop"), source)
        if len(pair) > n0 - 1:
            raise ConfigError(
                f"pair has {len(pair)} entries but range = {n0} allows {n0 - 1}", _line_of(text, "pair"), source
            )
    if hop[0].imag != 0.0:
        raise ConfigError("hop[0] must be real (A is hermitian)", _line_of(text, "hop"), source)
    return ModelSpec(tuple(hop), tuple(pair))


def load_model(path: str) -> ModelSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read model file: {exc.strerror}", None, str(path)) from None
    return parse_model(text, source=str(path))


def parse_nn_inline(spec: str) -> ModelSpec:
    """Parse ``gamma=1,h=1,D=2`` into a nearest-neighbour model."""
    vals = {"gamma": 0.0, "h": 0.0, "D": 0.0}
    for item in filter(None, (s.strip() for s in spec.split(","))):
        key, sep, val = item.partition("=")
        key = key.strip()
        if not sep or key not in vals:
            raise ConfigError(f"bad nn item {item!r}; expected gamma=..,h=..,D=..", None, "--nn")
        try:
            vals[key] = float(val)
        except ValueError:
            raise ConfigError(f"nn.{key} is not a number: {val!r}", None, "--nn") from None
    if not 0.0 <= vals["gamma"] <= 1.0:
        raise ConfigError("nn.gamma must lie in [0, 1]", None, "--nn")
    return nn_model(vals["gamma"], vals["h"], vals["D"])


def _fmt(z: complex) -> str:
    # adding 0.0 turns -0.0 into 0.0
    return f"[{z.real + 0.0!r}, {z.imag + 0.0!r}]"


def _trim(coeffs, keep: int) -> list[complex]:
    out = list(coeffs)
    while len(out) > keep and out[-1] == 0:
        out.pop()
    return out


def dump_model(model: ModelSpec) -> str:
    """Serialize a model in the explicit-coefficient format (trailing zeros dropped)."""
    hop = _trim(model.hop, 1)
    pair = _trim(model.pair, 0)
    n0 = max(len(hop), len(pair) + 1)
    lines = [f"range = {n0}", "hop = [" + ", ".join(_fmt(h) for h in hop) + "]"]
    if pair:
        lines.append("pair = [" + ", ".join(_fmt(p) for p in pair) + "]")
    return "\n".join(lines) + "\n"
