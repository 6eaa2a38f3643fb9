"""File formats: matrices (CSV/JSON), polynomials, channels, model configs,
and deterministic tabular output.

CSV bodies are byte-stable across runs: floats are written with shortest
round-trip repr and metadata lives in '#'-prefixed header comments (config
hash, seed, library version -- never timestamps).
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .channels import (
    Channel,
    HierarchyModel,
    expectation_channel,
    friendship_channel,
    intent_channel,
    make_channel,
)
from .errors import ParseError
from .pomdp import CostSpec, PollingModel
from .stochastic import ConvexPolynomial, validate_stochastic


# ----------------------------------------------------------------- matrices
def load_matrix(path, fmt: str | None = None) -> np.ndarray:
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    try:
        if fmt == "json":
            data = json.loads(path.read_text())
            if isinstance(data, dict) and "matrix" in data:
                data = data["matrix"]
            return np.asarray(data, dtype=float)
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh)
                    if r and not r[0].lstrip().startswith("#")]
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]  # optional header row
        return np.array([[float(x) for x in row] for row in rows])
    except (OSError, ValueError, IndexError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read matrix from {path}: {exc}") from exc


def save_matrix(path, matrix, fmt: str | None = None) -> None:
    path = Path(path)
    arr = np.asarray(matrix, dtype=float)
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    if fmt == "json":
        path.write_text(json.dumps(arr.tolist()))
    else:
        path.write_text("\n".join(",".join(repr(float(v)) for v in row)
                                  for row in arr) + "\n")


def load_polynomial(path) -> ConvexPolynomial:
    try:
        coeffs = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read polynomial from {path}: {exc}") from exc
    return ConvexPolynomial(np.asarray(coeffs, dtype=float))


def save_polynomial(path, poly: ConvexPolynomial) -> None:
    Path(path).write_text(json.dumps(poly.coefficients.tolist()))


# ----------------------------------------------------------------- channels
def channel_to_dict(ch: Channel) -> dict:
    return {"inputs": list(ch.input_labels),
            "outputs": list(ch.output_labels),
            "matrix": ch.matrix.entries.tolist()}


def channel_from_dict(payload: dict) -> Channel:
    kind = payload.get("type", "matrix")
    if kind == "matrix" or "matrix" in payload and "type" not in payload:
        return make_channel(np.asarray(payload["matrix"], dtype=float),
                            payload.get("inputs"), payload.get("outputs"))
    if kind == "intent":
        h = HierarchyModel(validate_stochastic(payload["B"]),
                           int(payload.get("N", len(payload["beta"]) - 1)))
        return intent_channel(h, ConvexPolynomial(payload["beta"]))
    if kind == "expectation":
        h = HierarchyModel(validate_stochastic(payload["B"]),
                           int(payload.get("N", payload["polled_depth"])))
        return expectation_channel(h, int(payload["polled_depth"]),
                                   int(payload["target_depth"]))
    if kind == "friendship":
        return friendship_channel(np.asarray(payload["B_level"], dtype=float),
                                  int(payload["n_friends"]))
    raise ParseError(f"unknown channel recipe type {kind!r}")


def load_channel(path) -> Channel:
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            payload = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read channel from {path}: {exc}") from exc
        if isinstance(payload, dict):
            return channel_from_dict(payload)
        return make_channel(np.asarray(payload, dtype=float))
    return make_channel(load_matrix(path))


def save_channel(path, ch: Channel) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(ch), indent=2))


def chain_to_dict(chain) -> dict:
    return {
        "channels": [channel_to_dict(c) for c in chain.channels],
        "garblings": [g.entries.tolist() for g in chain.garblings],
        "deficiencies": list(chain.deficiencies),
    }


# ------------------------------------------------------------- cost / model
def cost_spec_to_dict(costs: CostSpec) -> dict:
    out = {"variant": costs.variant}
    if costs.variant == "intent":
        out["level_costs"] = costs.level_costs.tolist()
        out["betas"] = [b.coefficients.tolist() for b in costs.betas]
        out["gamma1"] = costs.entropy_weights.tolist()
        out["gamma2"] = costs.offsets.tolist()
    else:
        out["measurement"] = costs.measurement.tolist()
        out["error_weights"] = costs.error_weights.tolist()
    if costs.ctilde_weight is not None:
        out["ctilde_weight"] = costs.ctilde_weight
    return out


def cost_spec_from_dict(payload: dict) -> CostSpec:
    variant = payload["variant"]
    cw = payload.get("ctilde_weight")
    if variant == "intent":
        return CostSpec.intent(
            level_costs=payload["level_costs"],
            betas=tuple(ConvexPolynomial(b) for b in payload["betas"]),
            entropy_weights=payload["gamma1"],
            offsets=payload["gamma2"],
            ctilde_weight=cw)
    maker = CostSpec.expectation if variant == "expectation" else CostSpec.friendship
    return maker(payload["measurement"], payload["error_weights"], ctilde_weight=cw)


def model_to_dict(model: PollingModel) -> dict:
    return {
        "P": model.P.entries.tolist(),
        "channels": [channel_to_dict(c) for c in model.channels],
        "costs": cost_spec_to_dict(model.costs),
        "rho": model.rho,
    }


def model_from_dict(payload: dict) -> PollingModel:
    if not 0.0 <= float(payload["rho"]) < 1.0:
        raise ParseError(f"rho = {payload['rho']} outside [0, 1)")
    return PollingModel(
        P=validate_stochastic(payload["P"]),
        channels=tuple(channel_from_dict(c) for c in payload["channels"]),
        costs=cost_spec_from_dict(payload["costs"]),
        rho=float(payload["rho"]),
    )


def load_model(path) -> tuple[PollingModel, dict]:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read model config from {path}: {exc}") from exc
    return model_from_dict(payload), payload


# ------------------------------------------------------------ tabular output
def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_table(columns, rows, fmt: str, meta: dict | None = None) -> str:
    """Deterministic CSV (with '#' metadata comments) or JSON rendering."""
    meta = meta or {}
    if fmt == "json":
        return json.dumps({"meta": meta, "columns": list(columns),
                           "rows": [[_fmt(v) for v in row] for row in rows]},
                          indent=2) + "\n"
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}={meta[key]}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_output(text: str, out: str | None) -> None:
    if out in (None, "-"):
        print(text, end="")
    else:
        Path(out).write_text(text)


def standard_meta(args_dict: dict, seed) -> dict:
    return {"config_hash": config_hash(args_dict), "seed": seed,
            "version": __version__}
