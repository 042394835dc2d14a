"""Plain-text run configuration: ``key = value`` lines, ``#`` comments.

Values resolve as defaults, then the file, then command-line overrides.
Errors carry the line number of the offending entry (or the flag name).
"""

from __future__ import annotations

from dataclasses import fields, replace

from .errors import ConfigError
from .experiments import RunConfig

FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CASTS = {"int": int, "float": float, "str": str}

# encoders with no parallel stack / no Chebyshev block
_NO_STACK = ("rff", "pe", "chebyshev")
_NO_CHEB = ("rff", "pe", "cafe")


def _cast(key: str, raw: str):
    kind = _CASTS[FIELD_TYPES[key]]
    try:
        if kind is int:
            value = int(raw, 0)
        else:
            value = kind(raw)
    except ValueError:
        raise ValueError(f"cannot parse {raw!r} as {FIELD_TYPES[key]} for key {key!r}") from None
    return value


def _where(source) -> dict:
    # file entries carry a line number; flags carry their spelling
    return {"line": source} if isinstance(source, int) else {}


def _fail(message: str, source) -> ConfigError:
    if isinstance(source, str):
        message = f"{source}: {message}"
    return ConfigError(message, **_where(source))


def parse_entries(text: str) -> dict[str, tuple[object, int]]:
    """Parse file text into ``{key: (value, line)}``."""
    out: dict[str, tuple[object, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in out:
            raise ConfigError(f"duplicate key {key!r} (first set on line {out[key][1]})", lineno)
        try:
            out[key] = (_cast(key, value), lineno)
        except ValueError as exc:
            raise ConfigError(str(exc), lineno) from None
    return out


def parse_config(text: str = "", cli_overrides: dict | None = None) -> RunConfig:
    """Resolve a :class:`RunConfig` from file text and flag overrides.

    ``cli_overrides`` maps keys to raw strings or typed values. When an
    encoder has no use for ``N`` or ``J`` and the key was never set, it is
    zeroed; an explicit incompatible value is an error.
    """
    sources: dict[str, object] = {}
    values: dict[str, object] = {}
    for key, (value, line) in parse_entries(text).items():
        values[key], sources[key] = value, line
    for key, raw in (cli_overrides or {}).items():
        flag = f"--{key}"
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r} ({flag})")
        try:
            values[key] = _cast(key, raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise _fail(str(exc), flag) from None
        sources[key] = flag

    encoder = values.get("encoder", RunConfig.encoder)
    blame = lambda key: sources.get(key, sources.get("encoder"))
    if encoder in _NO_STACK:
        if "N" in values and values["N"] != 0:
            raise _fail(f"encoder {encoder} has no parallel stack; N must be 0, got {values['N']}", blame("N"))
        values["N"] = 0
    elif "N" in values and values["N"] < 1:
        raise _fail(f"encoder {encoder} needs N >= 1, got N = {values['N']}", blame("N"))
    if encoder in _NO_CHEB:
        if "J" in values and values["J"] != 0:
            raise _fail(f"encoder {encoder} uses no Chebyshev features; J must be 0, got {values['J']}",
                        blame("J"))
        values["J"] = 0
    elif "J" in values and values["J"] < 1:
        raise _fail(f"encoder {encoder} needs J >= 1, got J = {values['J']}", blame("J"))

    cfg = replace(RunConfig(), **values)
    try:
        return cfg.validate()
    except ConfigError as exc:
        key = next((k for k in sources if str(exc).startswith(k) or f" {k} " in str(exc)), None)
        if key is None:
            raise
        raise _fail(str(exc), sources[key]) from None


def format_config(cfg: RunConfig) -> str:
    """Resolved configuration as ``key = value`` lines, re-parseable."""
    return "".join(f"{k} = {v}\n" for k, v in cfg.as_dict().items())
