"""Flat INI-style run configuration.

Layout: optional top-level keys (``mode``, ``seed``) followed by sections.
A micro run uses ``[micro]`` + ``[init]`` + ``[output]``; a macro run uses
``[macro]`` + ``[init]`` + ``[output]``.  Exactly the section matching the
mode must be present.  ``#`` starts a comment (handy for units); keys are
``name = value``; unknown sections or keys are errors, with line numbers.

Example::

    mode = micro
    seed = 1

    [micro]
    k_theta = 71        # alignment rate
    ...

    [init]
    n = 15000

    [output]
    dir = out/run1
    snapshot_every = 1.0
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

from .coefficients import ClosureCoefficients
from .errors import ConfigError
from .macrosim import MacroInit, MacroParams
from .microsim import InitSpec, MicroParams

_MODES = ("micro", "macro")
_SECTIONS = ("micro", "macro", "init", "output")

#: schema per section: key -> (type tag, required, default)
_TOP_SCHEMA = {
    "mode": ("str", True, None),
    "seed": ("int", False, 0),
}
_MICRO_SCHEMA = {
    "k_theta": ("float", True, None),
    "k_omega": ("float", True, None),
    "alpha2": ("float", True, None),
    "beta2": ("float", True, None),
    "R": ("float", True, None),
    "L": ("float", True, None),
    "dt": ("float", True, None),
    "t_end": ("float", True, None),
    "c": ("float", False, 1.0),
    "allow_stiff": ("bool", False, False),
}
_MACRO_SCHEMA = {
    "kappa": ("float", True, None),
    "nx": ("int", True, None),
    "ny": ("int", False, None),       # defaults to nx
    "L": ("float", False, 1.0),
    "dt": ("float", True, None),
    "t_end": ("float", True, None),
    "pressure_coef": ("float", False, None),
    "cfl_max": ("float", False, 0.9),
    "entropy_fix_coef": ("float", False, 0.05),
}
_INIT_MICRO_SCHEMA = {
    "n": ("int", True, None),
    "kind": ("str", False, "disordered"),
    "theta0": ("float", False, 0.0),
    "omega0": ("float", False, 0.0),
    "omega_scale": ("float", False, 5.0),
    "positive_fraction": ("float", False, 0.25),
    "kappa": ("float", False, None),
    "omega_variance": ("float", False, None),
}
_INIT_MACRO_SCHEMA = {
    "kind": ("str", False, "random"),
    "rho0": ("float", False, 1.0),
    "theta0": ("float", False, math.pi / 2),
    "omega0": ("float", False, 0.5),
    "rho_amp": ("float", False, 0.01),
    "omega_amp": ("float", False, 0.1),
    "sine_offset": ("float", False, 2.0),
    "sine_amp": ("float", False, 1.0),
}
_OUTPUT_SCHEMA = {
    "dir": ("str", False, "out"),
    "snapshot_every": ("float", False, 1.0),
    "diag_every": ("float", False, 0.1),
}


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    snapshot_every: float = 1.0
    diag_every: float = 0.1

    def __post_init__(self):
        if not (math.isfinite(self.snapshot_every)
                and self.snapshot_every > 0):
            raise ValueError("snapshot_every must be > 0")
        if not (math.isfinite(self.diag_every) and self.diag_every > 0):
            raise ValueError("diag_every must be > 0")


@dataclass(frozen=True)
class RunConfig:
    mode: str
    seed: int
    output: OutputSpec
    micro: MicroParams | None = None
    micro_init: InitSpec | None = None
    macro: MacroParams | None = None
    macro_init: MacroInit | None = None

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.mode == "micro":
            if self.micro is None or self.micro_init is None:
                raise ValueError("micro mode needs [micro] and [init]")
            if self.macro is not None or self.macro_init is not None:
                raise ValueError("macro sections not allowed in micro mode")
        else:
            if self.macro is None or self.macro_init is None:
                raise ValueError("macro mode needs [macro] and [init]")
            if self.micro is not None or self.micro_init is not None:
                raise ValueError("micro sections not allowed in macro mode")


def _coerce(raw: str, tag: str, key: str, line: int):
    if tag == "str":
        return raw
    if tag == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected integer, got {raw!r}", line)
    if tag == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected number, got {raw!r}", line)
    if tag == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{key}: expected boolean, got {raw!r}", line)
    raise AssertionError(tag)


def _tokenize(text: str):
    """Yield (line_no, section, key, raw_value) plus section header events."""
    entries: dict[tuple[str | None, str], tuple[str, int]] = {}
    section_lines: dict[str | None, int] = {None: 0}
    section: str | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}",
                                  line_no)
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section [{name}]", line_no)
            if name in section_lines:
                raise ConfigError(f"duplicate section [{name}]", line_no)
            section = name
            section_lines[name] = line_no
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}",
                              line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}",
                              line_no)
        if (section, key) in entries:
            raise ConfigError(f"duplicate key {key!r}", line_no)
        entries[(section, key)] = (value, line_no)
    return entries, section_lines


def _apply_schema(entries, section, schema, section_line):
    out = {}
    for key, (tag, required, default) in schema.items():
        hit = entries.pop((section, key), None)
        if hit is None:
            if required:
                where = f"[{section}]" if section else "top level"
                raise ConfigError(f"missing required key {key!r} in {where}",
                                  section_line)
            out[key] = default
        else:
            out[key] = _coerce(hit[0], tag, key, hit[1])
    return out


def parse_config(text: str, *, allow_stiff: bool = False) -> RunConfig:
    """Parse a run config.

    ``allow_stiff=True`` forces the micro stiffness override on before the
    parameters are validated, so a command-line flag can rescue a config
    that would otherwise be rejected by the ``dt * max(k)`` guard.
    """
    entries, section_lines = _tokenize(text)

    top = _apply_schema(entries, None, _TOP_SCHEMA, 0)
    mode = top["mode"]
    if mode not in _MODES:
        raise ConfigError(f"mode must be one of {_MODES}, got {mode!r}")
    seed = top["seed"]

    for name in ("micro", "macro"):
        if name != mode and name in section_lines:
            raise ConfigError(f"section [{name}] not allowed in {mode} mode",
                              section_lines[name])
    if mode not in section_lines:
        raise ConfigError(f"missing section [{mode}]")
    if "init" not in section_lines:
        raise ConfigError("missing section [init]")

    out_vals = _apply_schema(entries, "output", _OUTPUT_SCHEMA,
                             section_lines.get("output", 0))

    micro = micro_init = macro = macro_init = None
    if mode == "micro":
        mvals = _apply_schema(entries, "micro", _MICRO_SCHEMA,
                              section_lines["micro"])
        ivals = _apply_schema(entries, "init", _INIT_MICRO_SCHEMA,
                              section_lines["init"])
        _reject_leftovers(entries)
        if allow_stiff:
            mvals["allow_stiff"] = True
        try:
            micro = MicroParams(seed=seed, **mvals)
        except ValueError as e:
            raise ConfigError(str(e), section_lines["micro"]) from e
        try:
            micro_init = InitSpec(**ivals)
        except ValueError as e:
            raise ConfigError(str(e), section_lines["init"]) from e
    else:
        mvals = _apply_schema(entries, "macro", _MACRO_SCHEMA,
                              section_lines["macro"])
        ivals = _apply_schema(entries, "init", _INIT_MACRO_SCHEMA,
                              section_lines["init"])
        _reject_leftovers(entries)
        kappa = mvals.pop("kappa")
        if mvals["ny"] is None:
            mvals["ny"] = mvals["nx"]
        try:
            coeffs = ClosureCoefficients.from_kappa(kappa)
            macro = MacroParams(coeffs=coeffs, seed=seed, **mvals)
        except ValueError as e:
            raise ConfigError(str(e), section_lines["macro"]) from e
        try:
            macro_init = MacroInit(**ivals)
        except ValueError as e:
            raise ConfigError(str(e), section_lines["init"]) from e

    try:
        output = OutputSpec(**out_vals)
    except ValueError as e:
        raise ConfigError(str(e), section_lines.get("output", 0)) from e
    return RunConfig(mode=mode, seed=seed, output=output, micro=micro,
                     micro_init=micro_init, macro=macro,
                     macro_init=macro_init)


def _reject_leftovers(entries):
    for (section, key), (_, line) in entries.items():
        where = f"[{section}]" if section else "top level"
        raise ConfigError(f"unknown key {key!r} in {where}", line)


def parse_config_file(path, *, allow_stiff: bool = False) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    return parse_config(text, allow_stiff=allow_stiff)


# ----------------------------------------------------------------------------
# emission (canonical round-trippable form)
# ----------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def emit_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config(emit_config(c)) == c."""
    lines = [f"mode = {cfg.mode}", f"seed = {cfg.seed}", ""]
    if cfg.mode == "micro":
        lines.append("[micro]")
        for key in _MICRO_SCHEMA:
            lines.append(f"{key} = {_fmt(getattr(cfg.micro, key))}")
        lines.append("")
        lines.append("[init]")
        init = cfg.micro_init
        for key in _INIT_MICRO_SCHEMA:
            v = getattr(init, key)
            if v is not None:
                lines.append(f"{key} = {_fmt(v)}")
    else:
        lines.append("[macro]")
        lines.append(f"kappa = {_fmt(cfg.macro.coeffs.kappa)}")
        for key in _MACRO_SCHEMA:
            if key == "kappa":
                continue
            lines.append(f"{key} = {_fmt(getattr(cfg.macro, key))}")
        lines.append("")
        lines.append("[init]")
        for key in _INIT_MACRO_SCHEMA:
            lines.append(f"{key} = {_fmt(getattr(cfg.macro_init, key))}")
    lines.append("")
    lines.append("[output]")
    for key in _OUTPUT_SCHEMA:
        lines.append(f"{key} = {_fmt(getattr(cfg.output, key))}")
    lines.append("")
    return "\n".join(lines)


def with_overrides(cfg: RunConfig, *, allow_stiff: bool | None = None,
                   out_dir: str | None = None) -> RunConfig:
    """Apply command-line overrides onto a parsed config."""
    if allow_stiff and cfg.micro is not None and not cfg.micro.allow_stiff:
        cfg = replace(cfg, micro=replace(cfg.micro, allow_stiff=True))
    if out_dir is not None:
        cfg = replace(cfg, output=replace(cfg.output, dir=str(out_dir)))
    return cfg
