"""JSON model files.

Layout (version 1)::

    {
      "format": "gsdimred-model", "version": 1,
      "kind": "extraction" | "selection",
      "algo": str, "epsilon": float, "stop_reason": str,
      "n_features": int, "column_names": [str, ...],
      "preprocessing": {"kind", "mean", "scale", "unscaled"},
      "family": {"kind", "d", "max_degree", "include_constant", ["monomials"]} | null,
      "directions": [[float]] | null,          # extraction
      "components": [int] | null,              # gca
      "selected": [int] | null,                # selection
      "per_step": [float],
      "trace": {...},                          # lambda/trace or sigma per step
      "basis": {"monomials", "coefficients", "substituted",
                "dropped", "norms", "entry_source"} | null
    }

Floats are written with ``repr``, which round-trips exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dataset import Preprocessing
from .extract import ExtractionModel
from .family import FunctionFamily, Monomial
from .orthogonalizer import OrthoBasis
from .select import SelectionModel

__all__ = ["FORMAT", "VERSION", "ModelFormatError", "to_dict", "from_dict", "save", "load"]

FORMAT = "gsdimred-model"
VERSION = 1


class ModelFormatError(ValueError):
    """A model file is malformed or from an unsupported version."""


def _arr(a) -> list | None:
    return None if a is None else np.asarray(a, dtype=float).tolist()


def _basis_dict(basis: OrthoBasis | None) -> dict | None:
    if basis is None or not basis.track_coefficients:
        return None
    subs = [
        {"index": int(s)} if np.ndim(s) == 0 else {"vector": _arr(s)}
        for s in basis.substituted
    ]
    return {
        "monomials": [m.to_list() for m in basis.monomials],
        "coefficients": _arr(basis.coefficients),
        "substituted": subs,
        "dropped": [m.to_list() for m in basis.dropped],
        "norms": [float(x) for x in basis.norms],
        "entry_source": [int(x) for x in basis.entry_source],
    }


def _basis_from(data: dict | None) -> OrthoBasis | None:
    if data is None:
        return None
    subs = [int(s["index"]) if "index" in s else np.asarray(s["vector"], dtype=float)
            for s in data["substituted"]]
    return OrthoBasis.from_parts(
        [Monomial.from_list(m) for m in data["monomials"]],
        data["coefficients"],
        subs,
        dropped=[Monomial.from_list(m) for m in data["dropped"]],
        norms=data["norms"],
        entry_source=data["entry_source"],
    )


def to_dict(model: ExtractionModel | SelectionModel) -> dict:
    """Plain-data form of a fitted model."""
    out = {
        "format": FORMAT,
        "version": VERSION,
        "algo": model.algo,
        "epsilon": float(model.epsilon),
        "stop_reason": model.stop_reason,
        "column_names": list(model.column_names),
        "preprocessing": model.preprocessing.to_dict(),
        "family": None if model.family is None else model.family.to_dict(),
        "basis": _basis_dict(model.basis),
    }
    if isinstance(model, ExtractionModel):
        out.update(
            kind="extraction",
            n_features=model.n_features,
            directions=_arr(model.directions),
            components=None if model.components is None else list(model.components),
            selected=None,
            per_step=_arr(model.per_step_variance),
            trace={"lambda_max": _arr(model.lambda_trace), "trace": _arr(model.trace_trace)},
        )
    elif isinstance(model, SelectionModel):
        out.update(
            kind="selection",
            n_features=model.n_features,
            directions=None,
            components=None,
            selected=list(model.selected),
            per_step=_arr(model.per_step_sigma),
            trace={"sigma": _arr(model.sigma_trace),
                   "fourier_norms": _arr(model.fourier_norms)},
            argmax_rule=model.argmax_rule,
        )
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return out


def from_dict(data: dict) -> ExtractionModel | SelectionModel:
    """Inverse of :func:`to_dict`."""
    if not isinstance(data, dict):
        raise ModelFormatError("model file must hold a JSON object")
    if data.get("format") != FORMAT:
        raise ModelFormatError("not a gsdimred model file")
    if data.get("version") != VERSION:
        raise ModelFormatError(f"unsupported model version {data.get('version')!r}")
    try:
        d = int(data["n_features"])
        fam = None if data["family"] is None else FunctionFamily.from_dict(data["family"])
        common = dict(
            algo=data["algo"],
            stop_reason=data["stop_reason"],
            epsilon=float(data["epsilon"]),
            family=fam,
            basis=_basis_from(data["basis"]),
            preprocessing=Preprocessing.from_dict(data["preprocessing"]),
            column_names=tuple(data["column_names"]),
        )
        trace = data.get("trace") or {}
        if data["kind"] == "extraction":
            comps = data.get("components")
            return ExtractionModel(
                directions=np.asarray(data["directions"], dtype=float).reshape(-1, d),
                per_step_variance=np.asarray(data["per_step"], dtype=float),
                components=None if comps is None else tuple(comps),
                lambda_trace=np.asarray(trace.get("lambda_max", []), dtype=float),
                trace_trace=np.asarray(trace.get("trace", []), dtype=float),
                **common,
            )
        if data["kind"] == "selection":
            norms = trace.get("fourier_norms")
            return SelectionModel(
                selected=tuple(int(i) for i in data["selected"]),
                per_step_sigma=np.asarray(data["per_step"], dtype=float),
                n_features=d,
                sigma_trace=np.asarray(trace.get("sigma", []), dtype=float),
                fourier_norms=None if norms is None else np.asarray(norms, dtype=float),
                argmax_rule=data.get("argmax_rule"),
                **common,
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    raise ModelFormatError(f"unknown model kind {data.get('kind')!r}")


def save(model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(model), indent=1) + "\n")


def load(path: str | Path) -> ExtractionModel | SelectionModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not JSON: {exc}") from exc
    return from_dict(data)
