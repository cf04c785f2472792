"""Versioned plain-text model files.

Layout::

    elm-pi/1
    checksum sha256:<hex digest of every following line>
    <name> <kind> <payload>
    ...
    end

``kind`` is one of ``int``, ``float``, ``str``, ``vector`` (``n v1 .. vn``)
or ``matrix`` (``rows cols v11 v12 ..``, row-major). Floats are written with
17 significant digits so every value round-trips exactly.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .data import StandardizationParams
from .elm import ElmModel, HiddenLayer, format_specs, parse_specs
from .errors import ElmPiError, ModelFileError
from .intervals import PiModel
from .jackknife import WeightCovariance

__all__ = ["FORMAT_VERSION", "save_model", "load_model", "dumps", "loads"]

FORMAT_VERSION = "elm-pi/1"


def _f(x) -> str:
    return "%.17g" % x


def _line(name, kind, payload):
    return f"{name} {kind} {payload}"


def _vector(name, v):
    v = np.asarray(v, dtype=np.float64)
    return _line(name, "vector", " ".join([str(v.size)] + [_f(x) for x in v]))


def _matrix(name, m):
    m = np.asarray(m, dtype=np.float64)
    r, c = m.shape
    return _line(name, "matrix", " ".join([str(r), str(c)] + [_f(x) for x in m.ravel()]))


def _elm_lines(prefix, model: ElmModel, cov: WeightCovariance):
    layer = model.layer
    return [
        _line(f"{prefix}.d", "int", layer.d),
        _line(f"{prefix}.seed", "int", layer.seed),
        _line(f"{prefix}.specs", "str", format_specs(layer.specs)),
        _line(f"{prefix}.gamma", "float", _f(model.gamma)),
        _matrix(f"{prefix}.weights", layer.weights),
        _vector(f"{prefix}.beta", model.beta),
        _matrix(f"{prefix}.P", model.P),
        _matrix(f"{prefix}.sigma", cov.sigma),
        _line(f"{prefix}.leverage_clamp_count", "int", cov.leverage_clamp_count),
    ]


def dumps(model: PiModel) -> str:
    std = model.standardizer
    body = [
        _line("n_train", "int", model.n_train),
        _line("leave_out", "int", int(model.leave_out)),
        *_elm_lines("data", model.m_data, model.cov_data),
        *_elm_lines("var", model.m_var, model.cov_var),
        _vector("std.mean", std.mean),
        _vector("std.std", std.std),
        _vector("std.constant", std.constant.astype(np.float64)),
        "end",
    ]
    text = "\n".join(body) + "\n"
    digest = hashlib.sha256(text.encode()).hexdigest()
    return f"{FORMAT_VERSION}\nchecksum sha256:{digest}\n{text}"


def save_model(model: PiModel, path) -> None:
    Path(path).write_text(dumps(model))


def _parse_fields(lines):
    fields = {}
    for raw in lines:
        name, _, rest = raw.partition(" ")
        if name == "end":
            continue
        kind, _, payload = rest.partition(" ")
        try:
            if kind == "int":
                value = int(payload)
            elif kind == "float":
                value = float(payload)
            elif kind == "str":
                value = payload
            elif kind == "vector":
                toks = payload.split()
                n = int(toks[0])
                if len(toks) != n + 1:
                    raise ValueError(f"expected {n} values, found {len(toks) - 1}")
                value = np.array([float(t) for t in toks[1:]])
            elif kind == "matrix":
                toks = payload.split()
                r, c = int(toks[0]), int(toks[1])
                if len(toks) != r * c + 2:
                    raise ValueError(f"expected {r * c} values, found {len(toks) - 2}")
                value = np.array([float(t) for t in toks[2:]]).reshape(r, c)
            else:
                raise ValueError(f"unknown kind {kind!r}")
        except (ValueError, IndexError) as exc:
            raise ModelFileError(name, str(exc)) from None
        fields[name] = value
    return fields


def _get(fields, name):
    try:
        return fields[name]
    except KeyError:
        raise ModelFileError(name, "missing field") from None


def _elm_from(fields, prefix):
    g = lambda k: _get(fields, f"{prefix}.{k}")  # noqa: E731
    try:
        specs = parse_specs(g("specs"))
    except ElmPiError as exc:
        raise ModelFileError(f"{prefix}.specs", str(exc)) from None
    W = g("weights")
    d = g("d")
    L = sum(s.count for s in specs)
    if W.shape != (d + 1, L):
        raise ModelFileError(f"{prefix}.weights", f"shape {W.shape} does not match d={d}, L={L}")
    for key, shape in (("beta", (L,)), ("P", (L, L)), ("sigma", (L, L))):
        if g(key).shape != shape:
            raise ModelFileError(f"{prefix}.{key}", f"expected shape {shape}, got {g(key).shape}")
    layer = HiddenLayer(W, specs, g("seed"), d)
    model = ElmModel(layer, g("beta"), g("gamma"), g("P"))
    return model, WeightCovariance(g("sigma"), g("leverage_clamp_count"))


def loads(text: str) -> PiModel:
    lines = text.split("\n")
    if not lines or lines[0] != FORMAT_VERSION:
        found = lines[0] if lines else ""
        raise ModelFileError("version", f"expected {FORMAT_VERSION!r}, found {found!r}")
    if len(lines) < 2 or not lines[1].startswith("checksum sha256:"):
        raise ModelFileError("checksum", "missing checksum line")
    expected = lines[1][len("checksum sha256:"):]
    body = "\n".join(lines[2:])
    if hashlib.sha256(body.encode()).hexdigest() != expected:
        raise ModelFileError("checksum", "digest mismatch (file corrupted or truncated)")
    body_lines = [ln for ln in lines[2:] if ln]
    if not body_lines or body_lines[-1] != "end":
        raise ModelFileError("end", "file truncated")
    fields = _parse_fields(body_lines)

    m_data, cov_data = _elm_from(fields, "data")
    m_var, cov_var = _elm_from(fields, "var")
    if m_var.layer.d != m_data.layer.d:
        raise ModelFileError("var.d", "input dimension differs from data model")
    d = m_data.layer.d
    std = StandardizationParams(
        _get(fields, "std.mean"), _get(fields, "std.std"),
        _get(fields, "std.constant").astype(bool),
    )
    for name in ("std.mean", "std.std", "std.constant"):
        if fields[name].shape != (d,):
            raise ModelFileError(name, f"expected {d} entries, got {fields[name].size}")
    return PiModel(m_data, cov_data, m_var, cov_var, std,
                   _get(fields, "n_train"), bool(_get(fields, "leave_out")))


def load_model(path) -> PiModel:
    return loads(Path(path).read_text())
