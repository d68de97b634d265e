"""JSON documents: family, POVM and channel-chain specs, run configuration,
and serialization of reports.

Complex matrices travel as lists of rows whose entries are ``[re, im]``
pairs. Every document is checked against the schemas shipped in
``mifisher/schemas`` before anything is built from it.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import jsonschema
import numpy as np
from referencing import Registry, Resource

from .channels import (
    cnot,
    conditional_unitary,
    depolarizing,
    kraus_channel,
    on_party,
    push_family,
)
from .errors import SpecError
from .hierarchy import HierarchyReport, OptimizerConfig, VALUE_KEYS
from .matcore import BipartiteDims
from .povm import Povm
from .states import (
    DEFAULT_FD_STEP,
    ParameterizedFamily,
    generator_family,
    grid_family,
    make_builtin,
    _replace,
    product_family,
)

SCHEMA_NAMES = ("cmatrix", "family", "povm", "chain", "config", "report")
SIG_DIGITS = 12
# Serialized names of the six hierarchy entries; _lb marks optimized lower bounds.
SERIAL_KEYS = dict(zip(
    VALUE_KEYS,
    ("fi_local_a", "fi_local_b", "fi_product_lb", "fi_adaptive_ab_lb", "fi_adaptive_ba_lb", "fi_global"),
))
CSV_COLUMNS = ("theta",) + tuple(SERIAL_KEYS.values())


# ------------------------------------------------------------------ schemas


@functools.lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SCHEMA_NAMES:
        raise SpecError(f"no schema named {name!r}")
    text = resources.files("mifisher").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@functools.lru_cache(maxsize=None)
def _registry() -> Registry:
    pairs = [(load_schema(n)["$id"], Resource.from_contents(load_schema(n))) for n in SCHEMA_NAMES]
    return Registry().with_resources(pairs)


def validate_document(doc, name: str) -> None:
    """Raise :class:`SpecError` unless ``doc`` matches schema ``name``."""
    schema = load_schema(name)
    validator = jsonschema.Draft202012Validator(schema, registry=_registry())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise SpecError(f"{name} document invalid at {where}: {e.message}")


def read_json(source: Union[str, Path]):
    try:
        return json.loads(Path(source).read_text(encoding="utf-8"))
    except OSError as exc:
        raise SpecError(f"cannot read {source}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"{source} is not valid JSON: {exc}") from None


# ------------------------------------------------------------ complex matrices


def encode_cmatrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_cmatrix(rows) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=float)
    except ValueError:
        raise SpecError("ragged complex matrix") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise SpecError("complex matrix must be rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


# ---------------------------------------------------------------- builders


def _dims_of(doc) -> Optional[BipartiteDims]:
    d = doc.get("dims")
    return None if d is None else BipartiteDims(int(d[0]), int(d[1]))


def family_from_spec(doc: dict, validate: bool = True) -> ParameterizedFamily:
    if validate:
        validate_document(doc, "family")
    kind = doc["kind"]
    dims = _dims_of(doc)
    name = doc.get("name")
    if kind == "builtin":
        factors = [x if isinstance(x, str) else family_from_spec(x, validate=False) for x in doc.get("factors", ())]
        f = make_builtin(name, factors)
    elif kind == "generator":
        f = generator_family(decode_cmatrix(doc["rho0"]), decode_cmatrix(doc["generator"]), dims, name or "generator")
    elif kind == "grid":
        f = grid_family(doc["thetas"], [decode_cmatrix(s) for s in doc["states"]], dims, name or "grid")
    elif kind == "product":
        fa, fb = (family_from_spec(x, validate=False) for x in doc["factors"])
        f = product_family(fa, fb)
    else:
        f = family_from_spec(doc["base"], validate=False)
        for ch in chain_from_spec(doc["chain"], f.dims, validate=False):
            f = push_family(f, ch)
    if dims is not None and f.dims != dims:
        f = f.with_dims(dims)
    if name and kind in ("product", "mapped"):
        f = _replace(f, name=name)
    if "fd_step" in doc:
        f = f.with_fd_step(float(doc["fd_step"]))
    return f


def parse_family_arg(arg: str) -> ParameterizedFamily:
    """``builtin:NAME``, ``builtin:product_of:A,B`` or a path to a family spec."""
    if arg.startswith("builtin:"):
        parts = arg.split(":", 2)
        if len(parts) == 3:
            return make_builtin(parts[1], parts[2].split(","))
        return make_builtin(parts[1])
    return family_from_spec(read_json(arg))


def povm_from_spec(doc, validate: bool = True) -> Povm:
    if validate:
        validate_document(doc, "povm")
    if isinstance(doc, dict):
        return Povm(tuple(decode_cmatrix(e) for e in doc["elements"]), tuple(doc.get("labels", ())))
    return Povm(tuple(decode_cmatrix(e) for e in doc))


def chain_from_spec(doc: list, dims: Optional[BipartiteDims] = None, validate: bool = True) -> list:
    """Channels in application order; ``dims`` are those of the input state.

    Steps with a ``party`` act on that party only, with the identity on the
    other, and so need bipartite dims to be known at that point of the chain.
    """
    if validate:
        validate_document(doc, "chain")
    out = []
    for k, step in enumerate(doc):
        kind = step["type"]
        if kind == "cnot":
            ch = cnot()
        elif kind == "depolarizing":
            ch = depolarizing(float(step["q"]))
        elif kind == "conditional_unitary":
            controls = decode_cmatrix(step["controls"]) if "controls" in step else None
            ch = conditional_unitary([decode_cmatrix(u) for u in step["unitaries"]], controls)
        else:
            ch = kraus_channel([decode_cmatrix(e) for e in step["operators"]], step.get("label", "kraus"))
        if "party" in step:
            if dims is None:
                raise SpecError(f"chain step {k} targets party {step['party']} but the state has no bipartite dims")
            ch = on_party(ch, dims, step["party"])
        dims = ch.dims_out or (dims if ch.dim_in == ch.dim_out else None)
        out.append(ch)
    return out


def parse_chain_arg(arg: str, dims: Optional[BipartiteDims]) -> list:
    """A chain given as a path to a JSON file or as inline JSON text."""
    text = arg.strip()
    if text.startswith("["):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"inline chain is not valid JSON: {exc}") from None
    else:
        doc = read_json(arg)
    return chain_from_spec(doc, dims)


# ------------------------------------------------------------------- config


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by every CLI command."""

    fd_step: float = DEFAULT_FD_STEP
    starts: int = 16
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: {"eps": 1e-6, "slack": 1e-4})
    format: str = "json"

    def __post_init__(self):
        if not self.fd_step > 0:
            raise SpecError("fd_step must be positive")
        if self.starts < 1:
            raise SpecError("starts must be at least 1")
        if self.seed < 0:
            raise SpecError("seed must be non-negative")
        if self.format not in ("json", "csv"):
            raise SpecError(f"format must be json or csv, got {self.format!r}")
        if any(not v > 0 for v in self.tolerances.values()):
            raise SpecError("tolerances must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        validate_document(doc, "config")
        base = cls()
        tol = {**base.tolerances, **doc.get("tolerances", {})}
        return cls(
            fd_step=float(doc.get("fd_step", base.fd_step)),
            starts=int(doc.get("starts", base.starts)),
            seed=int(doc.get("seed", base.seed)),
            tolerances=tol,
            format=doc.get("format", base.format),
        )

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(starts=self.starts, seed=self.seed, **self.tolerances)

    def as_dict(self) -> dict:
        return {
            "fd_step": self.fd_step,
            "starts": self.starts,
            "seed": self.seed,
            "tolerances": dict(sorted(self.tolerances.items())),
        }


# ------------------------------------------------------------ serialization


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    """Round to ``digits`` significant digits; non-finite values are refused."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("non-finite value in a report")
    return float(format(x, f".{digits}g")) + 0.0


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(obj)
    return obj


def dumps(doc) -> str:
    """Deterministic JSON text: fixed key order, 12 significant digits."""
    return json.dumps(_clean(doc), indent=2, ensure_ascii=False) + "\n"


def values_dict(report: HierarchyReport) -> dict:
    return {SERIAL_KEYS[k]: report.values[k] for k in VALUE_KEYS}


def hierarchy_body(report: HierarchyReport) -> dict:
    diagnostics = {}
    for k, d in report.diagnostics.items():
        diagnostics[SERIAL_KEYS[k]] = {
            "starts": d["starts"],
            "certified": d["certified"],
            "best_start": d["best_start"],
            "converged": d["converged"],
            "all_converged": d["all_converged"],
            "nfev": int(sum(d["nfev"])),
        }
    return {
        "family": report.family,
        "theta": report.theta,
        "values": values_dict(report),
        "methods": {SERIAL_KEYS[k]: report.methods[k] for k in VALUE_KEYS},
        "verdicts": {_rename(k): v for k, v in report.verdicts.items()},
        "chain_ok": report.chain_ok,
        "distribution": report.distribution,
        "additivity": report.additivity,
        "diagnostics": diagnostics,
    }


def _rename(verdict: str) -> str:
    """'fi_product<=fi_global' -> 'fi_product_lb<=fi_global'."""
    return "<=".join(SERIAL_KEYS.get(side, side) for side in verdict.split("<="))


def format_csv_value(x) -> str:
    return "" if x is None else format(round_sig(x), f".{SIG_DIGITS}g")


__all__ = [
    "CSV_COLUMNS",
    "RunConfig",
    "SERIAL_KEYS",
    "chain_from_spec",
    "decode_cmatrix",
    "dumps",
    "encode_cmatrix",
    "family_from_spec",
    "hierarchy_body",
    "load_schema",
    "parse_chain_arg",
    "parse_family_arg",
    "povm_from_spec",
    "read_json",
    "round_sig",
    "validate_document",
    "values_dict",
]
