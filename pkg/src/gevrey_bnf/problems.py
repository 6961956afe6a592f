"""Problem files, result files and deterministic JSON output.

Floats are written with 17 significant digits and keys are sorted, so the
same data always produces the same bytes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .diagnostics import GevreyParams
from .engine import BNFResult, HamiltonianSpec
from .errors import SchemaError
from .fourier import DEFAULT_CONFIG, ArithmeticConfig, DiophantineVector, FourierSeries
from .series import HomogeneousPart, TaylorFourier

RESULT_FORMAT = "gevrey-bnf-result"
RESULT_VERSION = 1

# -- deterministic JSON ---------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    out = f"{x:.17g}"
    if out in ("0", "-0"):
        return "0.0"
    if all(ch not in out for ch in ".en"):
        out += ".0"
    return out


def dumps(obj, indent: int = 1, _level: int = 0) -> str:
    """JSON text with sorted keys and 17-significant-digit floats; NaN/inf become null."""
    pad = "\n" + " " * (indent * (_level + 1))
    end = "\n" + " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + dumps(obj[k], indent, _level + 1)
                 for k in sorted(obj, key=str)]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(dumps(v, indent, _level + 1) for v in obj) + end + "]"
    if hasattr(obj, "__float__"):
        return _fmt_float(float(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


# -- series --------------------------------------------------------------------

SERIES_SCHEMA = {
    "type": "object",
    "required": ["dim", "modes"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "real": {"type": "boolean"},
        "modes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["k"],
                "properties": {
                    "k": {"type": "array", "items": {"type": "integer"}},
                    "re": {"type": "number"},
                    "im": {"type": "number"},
                },
            },
        },
    },
}

TF_SCHEMA = {
    "type": "object",
    "required": ["dim", "parts"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "m_min": {"type": "integer"},
        "m_max": {"type": "integer"},
        "parts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["m", "terms"],
                "properties": {
                    "m": {"type": "integer", "minimum": 0},
                    "terms": {"type": "array", "items": {
                        "type": "object",
                        "required": ["alpha", "series"],
                        "properties": {
                            "alpha": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                            "series": SERIES_SCHEMA,
                        },
                    }},
                },
            },
        },
    },
}

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["dim", "omega", "terms"],
    "properties": {
        "name": {"type": "string"},
        "dim": {"type": "integer", "minimum": 1},
        "omega": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "tau": {"type": "number", "exclusiveMinimum": 0},
        "kappa": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "rho": {"type": "number", "minimum": 1},
        "L0": {"type": "number", "minimum": 1},
        "L1": {"type": "number", "minimum": 1},
        "L2": {"type": "number", "minimum": 1},
        "domain_radius": {"type": "number", "exclusiveMinimum": 0},
        "order_M": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0},
        "horizon": {"type": "integer", "minimum": 1},
        "k_max": {"type": "integer", "minimum": 1},
        "terms": {"type": "array", "items": {
            "type": "object",
            "required": ["alpha", "series"],
            "properties": {
                "alpha": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "series": SERIES_SCHEMA,
            },
        }},
    },
}


def _validate(doc, schema, what: str):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"{what}: {exc.message} at '{path}'") from None


def series_to_json(u: FourierSeries) -> dict:
    modes = [{"k": list(k), "re": float(complex(c).real), "im": float(complex(c).imag)}
             for k, c in sorted(u.items())]
    return {"dim": u.dim, "real": u.real, "modes": modes}


def series_from_json(doc: dict, config: ArithmeticConfig = DEFAULT_CONFIG) -> FourierSeries:
    _validate(doc, SERIES_SCHEMA, "Fourier series")
    dim = doc["dim"]
    data = {}
    for mode in doc["modes"]:
        k = tuple(mode["k"])
        if len(k) != dim:
            raise SchemaError(f"mode {list(k)} does not have {dim} components")
        data[k] = data.get(k, 0.0) + complex(mode.get("re", 0.0), mode.get("im", 0.0))
    try:
        return FourierSeries(dim, data, real=doc.get("real", False), config=config)
    except ValueError as exc:
        raise SchemaError(f"Fourier series: {exc}") from None


def tf_to_json(f: TaylorFourier) -> dict:
    parts = []
    for m in sorted(f.parts):
        terms = [{"alpha": list(a), "series": series_to_json(s)} for a, s in f.parts[m].items()]
        parts.append({"m": m, "terms": terms})
    return {"dim": f.dim, "m_min": f.m_min, "m_max": f.m_max, "parts": parts}


def tf_from_json(doc: dict, config: ArithmeticConfig = DEFAULT_CONFIG) -> TaylorFourier:
    _validate(doc, TF_SCHEMA, "Taylor-Fourier series")
    n = doc["dim"]
    parts = {}
    for part in doc["parts"]:
        m = part["m"]
        terms = {}
        for t in part["terms"]:
            alpha = tuple(t["alpha"])
            if len(alpha) != n or sum(alpha) != m:
                raise SchemaError(f"multi-index {list(alpha)} does not fit part of degree {m}")
            terms[alpha] = series_from_json(t["series"], config)
        parts[m] = HomogeneousPart(n, m, terms)
    return TaylorFourier(n, parts, doc.get("m_min", 0), doc.get("m_max", -1))


# -- problems ------------------------------------------------------------------


@dataclass
class Problem:
    spec: HamiltonianSpec
    order: int = 6
    seed: int = 0
    name: str = ""
    raw: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def problem_from_dict(doc: dict) -> Problem:
    """Validate and build a problem; raises :class:`SchemaError` or ``ResonantMode``."""
    _validate(doc, PROBLEM_SCHEMA, "problem")
    n = doc["dim"]
    if len(doc["omega"]) != n:
        raise SchemaError(f"omega has {len(doc['omega'])} components, dim is {n}")
    config = ArithmeticConfig(k_max=doc.get("k_max", DEFAULT_CONFIG.k_max))
    by_degree: dict = {}
    notes = []
    for t in doc["terms"]:
        alpha = tuple(t["alpha"])
        if len(alpha) != n:
            raise SchemaError(f"multi-index {list(alpha)} does not have {n} components")
        if sum(alpha) == 0:
            # H(theta, 0) is normalized to zero; a constant term only shifts the energy
            notes.append("dropped the r-independent term (energy shift)")
            continue
        if sum(alpha) == 1:
            raise SchemaError(f"term {list(alpha)} is linear; the linear part is fixed by omega")
        series = series_from_json(t["series"], config)
        if series.dim != n:
            raise SchemaError(f"series for {list(alpha)} lives on a torus of dimension {series.dim}")
        if not series.real:
            raise SchemaError(f"series for {list(alpha)} must be real")
        terms = by_degree.setdefault(sum(alpha), {})
        terms[alpha] = terms[alpha] + series if alpha in terms else series
    parts = {m: HomogeneousPart(n, m, t) for m, t in by_degree.items()}
    coeffs = TaylorFourier(n, parts)
    tau = float(doc.get("tau", max(1.0, n - 1)))
    horizon = int(doc.get("horizon", 100))
    if "kappa" in doc:
        omega = DiophantineVector(tuple(doc["omega"]), float(doc["kappa"]), tau, horizon)
    else:
        omega = DiophantineVector.from_omega(doc["omega"], tau, horizon, config.resonance_floor)
    params = GevreyParams(float(doc.get("rho", 1.0)), tau, omega.kappa,
                          float(doc.get("L0", 1.0)), float(doc.get("L1", 1.0)),
                          float(doc.get("L2", 1.0)))
    try:
        spec = HamiltonianSpec(n, omega, coeffs, params, float(doc.get("domain_radius", 0.1)), config)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    return Problem(spec, int(doc.get("order_M", 6)), int(doc.get("seed", 0)),
                   doc.get("name", ""), doc, notes)


def load_problem(path) -> Problem:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read problem file {path}: {exc}") from None
    return problem_from_dict(doc)


def bundled_path(name: str) -> Path:
    """Path of a problem shipped with the package, e.g. ``"pendulum.json"``."""
    return Path(str(resources.files("gevrey_bnf") / "data" / name))


def bundled_problem(name: str) -> Problem:
    return load_problem(bundled_path(name))


def pendulum_problem(omega0: float = 1.0, eps: float = 0.5, **extra) -> dict:
    """``H = omega0 r + (1 + eps cos theta) r^2 / 2`` as a problem document."""
    doc = {
        "name": f"pendulum omega0={omega0:.17g} eps={eps:.17g}",
        "dim": 1, "omega": [omega0], "tau": 1.0, "rho": 1.0,
        "domain_radius": 0.5, "order_M": 6, "seed": 0,
        "terms": [{"alpha": [2], "series": {"dim": 1, "real": True, "modes": [
            {"k": [-1], "re": eps / 4, "im": 0.0},
            {"k": [0], "re": 0.5, "im": 0.0},
            {"k": [1], "re": eps / 4, "im": 0.0}]}}],
    }
    doc.update(extra)
    return doc


# -- results -------------------------------------------------------------------

RESULT_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "order", "dim", "omega", "g", "normal_form"],
    "properties": {
        "format": {"const": RESULT_FORMAT},
        "version": {"const": RESULT_VERSION},
        "order": {"type": "integer", "minimum": 2},
        "dim": {"type": "integer", "minimum": 1},
        "omega": {"type": "array", "items": {"type": "number"}},
        "g": TF_SCHEMA,
        "normal_form": TF_SCHEMA,
        "B_parts": {"anyOf": [{"type": "null"}, TF_SCHEMA]},
        "divisor_log": {"type": "object"},
        "truncation_log": {"type": "object"},
        "error": {"type": ["string", "null"]},
        "problem": {"type": ["object", "null"]},
    },
}


def result_to_json(result: BNFResult, problem: dict | None = None) -> dict:
    B = None
    if result.B_parts is not None:
        B = tf_to_json(TaylorFourier(result.dim, dict(result.B_parts)))
    return {
        "format": RESULT_FORMAT,
        "version": RESULT_VERSION,
        "order": result.order,
        "dim": result.dim,
        "omega": list(result.omega),
        "g": tf_to_json(result.g),
        "normal_form": tf_to_json(result.H0_tf()),
        "B_parts": B,
        "divisor_log": {str(m): v for m, v in sorted(result.divisor_log.items())},
        "truncation_log": {str(m): v for m, v in sorted(result.truncation_log.items())},
        "error": result.error,
        "problem": problem,
    }


def result_from_json(doc: dict) -> BNFResult:
    _validate(doc, RESULT_SCHEMA, "result")
    g = tf_from_json(doc["g"])
    nf = tf_from_json(doc["normal_form"])
    B = None
    if doc.get("B_parts") is not None:
        B = dict(tf_from_json(doc["B_parts"]).parts)
    try:
        divisors = {int(m): (math.inf if v is None else float(v))
                    for m, v in doc.get("divisor_log", {}).items()}
        trunc = {int(m): float(v) for m, v in doc.get("truncation_log", {}).items()}
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"result logs: {exc}") from None
    normal_form = [nf.parts[m] for m in sorted(nf.parts) if m >= 2]
    return BNFResult(doc["order"], doc["dim"], tuple(doc["omega"]), g, normal_form, B,
                     divisors, trunc, doc.get("error"))


def load_result(path):
    """Return ``(BNFResult, problem dict or None)``; raises :class:`SchemaError`."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read result file {path}: {exc}") from None
    return result_from_json(doc), doc.get("problem")
