"""Plain-text model files.

Layout::

    # comment
    [meta]
    n = 1
    coords = x
    [params]
    m = 1.0
    [lagrangian]
    L = 0.5*m*qd0^2
    [rayleigh]
    R = ...
    [constraints]
    f0 = ...
    [radiative]
    PE = ...
    [residual]
    Q0 = ...
    [options]
    regularize_sgn = false
    epsilon = 0.001
    homogeneous_pe = false
    gauge = <expr>

Two further optional sections carry run defaults: ``[initial]`` with
``t``, ``q``, ``qd`` and ``qdd`` (comma-separated vectors) and
``[integrator]`` with ``method``, ``t0``, ``t1``, ``dt``, ``rel_tol``,
``abs_tol``, ``beta``, ``max_steps``, ``accel_ceiling`` and ``dt_max``.
"""
from __future__ import annotations

import re
from pathlib import Path

from .expr import ZERO, ParseContext, ParseError, format_expr, parse
from .jets import JetState
from .model import ModelError, ModelSpec

__all__ = ["ModelFileError", "loads", "dumps", "load", "dump"]

SECTIONS = ("meta", "params", "lagrangian", "rayleigh", "constraints", "radiative",
            "residual", "options", "initial", "integrator")
INTEGRATOR_KEYS = {"method": str, "t0": float, "t1": float, "dt": float, "rel_tol": float,
                   "abs_tol": float, "beta": float, "max_steps": int, "accel_ceiling": float,
                   "dt_max": float}

_HEADER = re.compile(r"^\[([A-Za-z_]+)\]$")
_ENTRY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


class ModelFileError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _bool(text, line):
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ModelFileError(f"expected true or false, got {text!r}", line)


def _float(text, line):
    try:
        return float(text)
    except ValueError:
        raise ModelFileError(f"expected a real number, got {text!r}", line) from None


def _vector(text, line):
    return [_float(part.strip(), line) for part in text.split(",") if part.strip()]


def _indexed(entries, prefix, section):
    out = {}
    for key, (value, line) in entries.items():
        m = re.fullmatch(prefix + r"(\d+)", key)
        if not m:
            raise ModelFileError(f"unexpected key {key!r} in [{section}]", line)
        out[int(m.group(1))] = (value, line)
    if sorted(out) != list(range(len(out))):
        raise ModelFileError(f"[{section}] indices must be 0..{len(out) - 1}")
    return [out[i] for i in range(len(out))]


def loads(text: str) -> ModelSpec:
    """Parse model-file text into a ``ModelSpec``."""
    if text.startswith("﻿"):
        text = text[1:]
    sections: dict = {}
    current = None
    for number, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        header = _HEADER.match(line)
        if header:
            current = header.group(1)
            if current not in SECTIONS:
                raise ModelFileError(f"unknown section [{current}]", number)
            if current in sections:
                raise ModelFileError(f"duplicate section [{current}]", number)
            sections[current] = {}
            continue
        entry = _ENTRY.match(line)
        if entry is None:
            raise ModelFileError(f"cannot read {line!r}", number)
        if current is None:
            raise ModelFileError("entry outside of any section", number)
        key, value = entry.group(1), entry.group(2).strip()
        if key in sections[current]:
            raise ModelFileError(f"duplicate key {key!r}", number)
        sections[current][key] = (value, number)

    def one(section, key, required=False):
        entries = sections.get(section, {})
        extra = set(entries) - {key}
        if extra:
            name = sorted(extra)[0]
            raise ModelFileError(f"unexpected key {name!r} in [{section}]", entries[name][1])
        if key not in entries:
            if required:
                raise ModelFileError(f"missing {key} in [{section}]")
            return None, None
        return entries[key]

    meta = sections.get("meta", {})
    if "n" not in meta:
        raise ModelFileError("missing n in [meta]")
    for key, (_, line) in meta.items():
        if key not in ("n", "coords", "name"):
            raise ModelFileError(f"unexpected key {key!r} in [meta]", line)
    try:
        n = int(meta["n"][0])
    except ValueError:
        raise ModelFileError("n must be an integer", meta["n"][1]) from None
    coords = [c.strip() for c in meta["coords"][0].split(",")] if "coords" in meta else None
    name = meta["name"][0] if "name" in meta else None

    params = {key: _float(value, line) for key, (value, line) in sections.get("params", {}).items()}
    L, L_line = one("lagrangian", "L", required=True)
    R, R_line = one("rayleigh", "R")
    PE, PE_line = one("radiative", "PE")
    f_entries = _indexed(sections.get("constraints", {}), "f", "constraints")
    Q_entries = _indexed(sections.get("residual", {}), "Q", "residual")
    context = ParseContext(n, len(f_entries), tuple(params))

    def expression(text, line):
        if text is None:
            return None
        try:
            return parse(text, context)
        except ParseError as exc:
            raise ModelFileError(str(exc), line) from None

    L, R, PE = expression(L, L_line), expression(R, R_line), expression(PE, PE_line)
    constraints = [expression(v, line) for v, line in f_entries]
    residual = [expression(v, line) for v, line in Q_entries]

    options = {"regularize_sgn": False, "epsilon": 1e-3, "homogeneous_pe": False, "gauge": None}
    for key, (value, line) in sections.get("options", {}).items():
        if key in ("regularize_sgn", "homogeneous_pe"):
            options[key] = _bool(value, line)
        elif key == "epsilon":
            options[key] = _float(value, line)
        elif key == "gauge":
            options[key] = expression(value, line)
        else:
            raise ModelFileError(f"unexpected key {key!r} in [options]", line)

    initial = None
    if "initial" in sections:
        fields = {}
        for key, (value, line) in sections["initial"].items():
            if key == "t":
                fields["t"] = _float(value, line)
            elif key in ("q", "qd", "qdd", "qddd"):
                fields[key] = _vector(value, line)
            else:
                raise ModelFileError(f"unexpected key {key!r} in [initial]", line)
        if "q" not in fields:
            raise ModelFileError("missing q in [initial]")
        initial = JetState(t=fields.pop("t", 0.0), **fields)

    integrator = {}
    for key, (value, line) in sections.get("integrator", {}).items():
        kind = INTEGRATOR_KEYS.get(key)
        if kind is None:
            raise ModelFileError(f"unexpected key {key!r} in [integrator]", line)
        if kind is float:
            integrator[key] = _float(value, line)
        elif kind is int:
            try:
                integrator[key] = int(value)
            except ValueError:
                raise ModelFileError(f"{key} must be an integer", line) from None
        else:
            integrator[key] = value

    try:
        return ModelSpec(
            n=n, L=L, R=R or 0, constraints=constraints, PE=PE or 0,
            Qr=residual or None, params=params, coords=coords,
            regularize_sgn=options["regularize_sgn"], epsilon=options["epsilon"],
            homogeneous_pe=options["homogeneous_pe"], gauge=options["gauge"], initial=initial,
            integrator=integrator, name=name,
        )
    except (ModelError, ValueError) as exc:
        raise ModelFileError(str(exc)) from exc


def _vec_text(values):
    return ", ".join(repr(float(v)) for v in values)


def dumps(spec: ModelSpec) -> str:
    """Serialize ``spec``; ``loads(dumps(spec))`` compiles to the same model."""
    lines = ["[meta]"]
    if spec.name:
        lines.append(f"name = {spec.name}")
    lines.append(f"n = {spec.n}")
    lines.append("coords = " + ",".join(spec.coords))
    if spec.params:
        lines += ["", "[params]"]
        lines += [f"{k} = {v!r}" for k, v in spec.params.items()]
    lines += ["", "[lagrangian]", f"L = {format_expr(spec.L)}"]
    if not _is_zero(spec.R):
        lines += ["", "[rayleigh]", f"R = {format_expr(spec.R)}"]
    if spec.constraints:
        lines += ["", "[constraints]"]
        lines += [f"f{i} = {format_expr(f)}" for i, f in enumerate(spec.constraints)]
    if not _is_zero(spec.PE):
        lines += ["", "[radiative]", f"PE = {format_expr(spec.PE)}"]
    if not all(_is_zero(Q) for Q in spec.Qr):
        lines += ["", "[residual]"]
        lines += [f"Q{i} = {format_expr(Q)}" for i, Q in enumerate(spec.Qr)]
    lines += ["", "[options]",
              f"regularize_sgn = {str(spec.regularize_sgn).lower()}",
              f"epsilon = {spec.epsilon!r}",
              f"homogeneous_pe = {str(spec.homogeneous_pe).lower()}"]
    if spec.gauge is not None:
        lines.append(f"gauge = {format_expr(spec.gauge)}")
    if spec.initial is not None:
        s = spec.initial
        lines += ["", "[initial]", f"t = {s.t!r}"]
        for name in ("q", "qd", "qdd", "qddd"):
            value = getattr(s, name)
            if value is not None:
                lines.append(f"{name} = {_vec_text(value)}")
    if spec.integrator:
        lines += ["", "[integrator]"]
        for key in INTEGRATOR_KEYS:
            if key in spec.integrator:
                value = spec.integrator[key]
                lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _is_zero(e):
    return e is ZERO


def load(path) -> ModelSpec:
    return loads(Path(path).read_text(encoding="utf-8"))


def dump(spec: ModelSpec, path) -> None:
    Path(path).write_text(dumps(spec), encoding="utf-8", newline="\n")
