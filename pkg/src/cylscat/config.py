"""
Experiment configuration in INI form.

Example::

    [profile]
    kind = bulge
    amplitude = 0.3
    a = 1.0

    [potential]
    V0 = 0.05 0.0 0.02     ; polynomial-bump coefficients c_0 c_1 ...
    V0_width = 0.8

    [model]
    h = 0.02
    delta_thr = 1e-3
    origin_offset = 0

    [run]
    h = 0.04, 0.02, 0.01
    out = results

Every section is optional.  ``profile.kind`` also accepts ``cylinder`` for the
constant profile.  Potential terms take ``none`` or a list of coefficients.
Unknown sections or keys raise ConfigError.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

from .errors import ConfigError
from .geometry import ModelSpec, PotentialSpec, PotentialTerm, ProfileFunction

ALLOWED = {
    "profile": {"kind", "amplitude", "a", "width"},
    "potential": {"V0", "V0_width", "V2", "V2_width", "W", "W_width"},
    "model": {"h", "delta_thr", "origin_offset"},
    "run": {"h", "out", "threads"},
}

PRESET_AMPLITUDE = {"constant": 0.0, "bulge": 0.3, "hourglass": -0.2}


@dataclass
class ExperimentConfig:
    spec: ModelSpec
    hs: tuple = ()
    out: str | None = None
    threads: int | None = None
    sha256: str = ""
    source: str = ""
    extra: dict = field(default_factory=dict)


def _float(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from None


def parse_float_list(raw: str, what: str = "list") -> tuple:
    parts = [p for p in raw.replace(",", " ").split() if p]
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{what}: not a list of numbers: {raw!r}") from None


def _term(cp, name):
    sec = cp["potential"] if cp.has_section("potential") else {}
    raw = sec.get(name, "none").strip()
    if raw.lower() in ("none", "0", ""):
        return PotentialTerm()
    coeffs = parse_float_list(raw, f"[potential] {name}")
    width = _float("potential", f"{name}_width", sec.get(f"{name}_width", "1.0"))
    try:
        return PotentialTerm(coeffs, width)
    except ValueError as exc:
        raise ConfigError(f"[potential] {name}: {exc}") from None


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keys are case-sensitive (V0 vs v0)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    for sec in cp.sections():
        if sec not in ALLOWED:
            raise ConfigError(f"unknown section [{sec}]")
        unknown = set(cp[sec]) - ALLOWED[sec]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")

    prof = cp["profile"] if cp.has_section("profile") else {}
    kind = prof.get("kind", "bulge").strip()
    if kind == "cylinder":
        kind = "constant"
    if kind not in PRESET_AMPLITUDE:
        raise ConfigError(f"[profile] kind: unknown profile {kind!r}")
    amp = _float("profile", "amplitude", prof.get("amplitude", repr(PRESET_AMPLITUDE[kind])))
    a = _float("profile", "a", prof.get("a", "1.0"))
    width = _float("profile", "width", prof["width"]) if "width" in prof else None
    mod = cp["model"] if cp.has_section("model") else {}
    try:
        profile = ProfileFunction(kind, amp, a, width)
        spec = ModelSpec(
            profile,
            PotentialSpec(_term(cp, "V0"), _term(cp, "V2"), _term(cp, "W")),
            h=_float("model", "h", mod.get("h", "0.1")),
            origin_offset=_float("model", "origin_offset", mod.get("origin_offset", "0")),
            delta_thr=_float("model", "delta_thr", mod.get("delta_thr", "1e-3")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    run = cp["run"] if cp.has_section("run") else {}
    hs = parse_float_list(run["h"], "[run] h") if "h" in run else ()
    threads = None
    if "threads" in run:
        try:
            threads = int(run["threads"])
        except ValueError:
            raise ConfigError(f"[run] threads: not an integer: {run['threads']!r}") from None
    return ExperimentConfig(
        spec=spec, hs=hs, out=run.get("out"), threads=threads,
        sha256=hashlib.sha256(text.encode()).hexdigest(), source=source,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def preset_config(name: str) -> ExperimentConfig:
    """Configuration of a built-in model, hashed like the equivalent file."""
    if name not in ("cylinder", "bulge", "hourglass"):
        raise ConfigError(f"unknown model preset {name!r}")
    return parse_config(f"[profile]\nkind = {name}\n", f"<preset {name}>")
