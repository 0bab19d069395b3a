"""JSON model files for the three machine kinds.

Layout: {"format_version": "1", "kind": K, K: body} with exactly one body
key matching the kind. Complex numbers are two-element [re, im] arrays;
matrices are row-major nested arrays. Bodies:

  hmm         alphabet, transitions ([{symbol, matrix}] of real matrices),
              initial (real vector)
  hqmm        kraus ([{symbol, matrix}] of complex matrices), initial
              (complex matrix), optional completeness_tol
  open_system dim, h_int, dt, initial, channels ([{symbol, feedback,
              terms: [{xi, L}]}])

Malformed documents raise ModelFormatError; documents that parse but
violate a model invariant raise the model's own ValidationError with the
invariant named.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ModelFormatError
from .hmm import HMM
from .hqmm import HQMM, LabeledKrausSet
from .linalg import DensityMatrix
from .opensystem import FeedbackChannel, JumpTerm, OpenSystemSpec

FORMAT_VERSION = "1"
KINDS = ("hmm", "hqmm", "open_system")


@dataclass(frozen=True)
class OpenSystemModel:
    """An open-system spec together with the initial state stored with it."""

    spec: OpenSystemSpec
    initial: DensityMatrix


def _require(node, key, where):
    if not isinstance(node, dict) or key not in node:
        raise ModelFormatError(f"missing key {key!r} in {where}")
    return node[key]


def _number(node, where) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ModelFormatError(f"expected a number in {where}, got {type(node).__name__}")
    return float(node)


def _complex_scalar(node, where) -> complex:
    if not (isinstance(node, list) and len(node) == 2):
        raise ModelFormatError(f"expected [re, im] in {where}")
    return complex(_number(node[0], where), _number(node[1], where))


def _real_vector(node, where) -> np.ndarray:
    if not isinstance(node, list) or not node:
        raise ModelFormatError(f"expected a nonempty array in {where}")
    return np.array([_number(x, where) for x in node], dtype=float)


def _real_matrix(node, where) -> np.ndarray:
    if not isinstance(node, list) or not all(isinstance(r, list) for r in node):
        raise ModelFormatError(f"expected a nested array in {where}")
    return np.array([[_number(x, where) for x in row] for row in node], dtype=float)


def _complex_matrix(node, where) -> np.ndarray:
    if not isinstance(node, list) or not all(isinstance(r, list) for r in node):
        raise ModelFormatError(f"expected a nested array in {where}")
    return np.array(
        [[_complex_scalar(x, where) for x in row] for row in node], dtype=complex
    )


def _labeled_entries(node, where):
    if not isinstance(node, list) or not node:
        raise ModelFormatError(f"expected a nonempty array in {where}")
    out = []
    for i, entry in enumerate(node):
        sym = _require(entry, "symbol", f"{where}[{i}]")
        if not isinstance(sym, str):
            raise ModelFormatError(f"symbol in {where}[{i}] must be a string")
        out.append((sym, _require(entry, "matrix", f"{where}[{i}]"), f"{where}[{i}]"))
    return out


def _parse_hmm(body) -> HMM:
    alphabet = _require(body, "alphabet", "hmm body")
    if not isinstance(alphabet, list) or not all(isinstance(s, str) for s in alphabet):
        raise ModelFormatError("hmm alphabet must be an array of strings")
    transitions = {}
    for sym, mat, where in _labeled_entries(_require(body, "transitions", "hmm body"),
                                            "hmm transitions"):
        if sym in transitions:
            raise ModelFormatError(f"duplicate transition matrix for symbol {sym!r}")
        transitions[sym] = _real_matrix(mat, where)
    initial = _real_vector(_require(body, "initial", "hmm body"), "hmm initial")
    return HMM(alphabet, transitions, initial)


def _parse_hqmm(body) -> HQMM:
    operators = [
        (sym, _complex_matrix(mat, where))
        for sym, mat, where in _labeled_entries(_require(body, "kraus", "hqmm body"),
                                                "hqmm kraus")
    ]
    initial = DensityMatrix(
        _complex_matrix(_require(body, "initial", "hqmm body"), "hqmm initial")
    )
    kwargs = {}
    if "completeness_tol" in body:
        kwargs["completeness_tol"] = _number(body["completeness_tol"],
                                             "hqmm completeness_tol")
    return HQMM(LabeledKrausSet(operators, **kwargs), initial)


def _parse_open_system(body) -> OpenSystemModel:
    dim = _require(body, "dim", "open_system body")
    if isinstance(dim, bool) or not isinstance(dim, int):
        raise ModelFormatError("open_system dim must be an integer")
    h_int = _complex_matrix(_require(body, "h_int", "open_system body"),
                            "open_system h_int")
    dt = _number(_require(body, "dt", "open_system body"), "open_system dt")
    channels = []
    node = _require(body, "channels", "open_system body")
    if not isinstance(node, list):
        raise ModelFormatError("open_system channels must be an array")
    for i, ch in enumerate(node):
        where = f"open_system channels[{i}]"
        sym = _require(ch, "symbol", where)
        if not isinstance(sym, str):
            raise ModelFormatError(f"symbol in {where} must be a string")
        feedback = _complex_matrix(_require(ch, "feedback", where), f"{where} feedback")
        terms_node = _require(ch, "terms", where)
        if not isinstance(terms_node, list):
            raise ModelFormatError(f"terms in {where} must be an array")
        terms = []
        for j, t in enumerate(terms_node):
            tw = f"{where} terms[{j}]"
            terms.append(JumpTerm(
                amplitude=_complex_scalar(_require(t, "xi", tw), f"{tw} xi"),
                operator=_complex_matrix(_require(t, "L", tw), f"{tw} L"),
            ))
        channels.append(FeedbackChannel(symbol=sym, feedback=feedback,
                                        terms=tuple(terms)))
    spec = OpenSystemSpec(dim=dim, h_int=h_int, channels=tuple(channels), dt=dt)
    initial = DensityMatrix(
        _complex_matrix(_require(body, "initial", "open_system body"),
                        "open_system initial")
    )
    if initial.dim != spec.dim:
        raise ModelFormatError(
            f"open_system initial state has dimension {initial.dim}, expected {spec.dim}"
        )
    return OpenSystemModel(spec=spec, initial=initial)


_PARSERS = {"hmm": _parse_hmm, "hqmm": _parse_hqmm, "open_system": _parse_open_system}


def parse_model_dict(doc) -> HMM | HQMM | OpenSystemModel:
    """Validate and build a model from an already-decoded document."""
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = _require(doc, "format_version", "model document")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format_version {version!r}; this build reads {FORMAT_VERSION!r}"
        )
    kind = _require(doc, "kind", "model document")
    if kind not in KINDS:
        raise ModelFormatError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    stray = [k for k in KINDS if k != kind and k in doc]
    if stray:
        raise ModelFormatError(
            f"document of kind {kind!r} also carries body key(s) {stray}"
        )
    body = _require(doc, kind, "model document")
    return _PARSERS[kind](body)


def parse_model(path) -> HMM | HQMM | OpenSystemModel:
    """Read, validate, and build the model stored at path."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    return parse_model_dict(doc)


def _encode_complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _encode_complex_matrix(m: np.ndarray) -> list:
    return [[_encode_complex(complex(x)) for x in row] for row in np.asarray(m)]


def _encode_real_matrix(m: np.ndarray) -> list:
    return [[float(x) for x in row] for row in np.asarray(m)]


def serialize_model(model) -> dict:
    """Document for any of the three model kinds."""
    if isinstance(model, HMM):
        body = {
            "alphabet": list(model.alphabet),
            "transitions": [
                {"symbol": s, "matrix": _encode_real_matrix(model.transitions[s])}
                for s in model.alphabet
            ],
            "initial": [float(x) for x in model.initial],
        }
        kind = "hmm"
    elif isinstance(model, HQMM):
        body = {
            "kraus": [
                {"symbol": s, "matrix": _encode_complex_matrix(m)}
                for s, m in model.kraus.operators
            ],
            "initial": _encode_complex_matrix(model.initial.mat),
            "completeness_tol": float(model.kraus.completeness_tol),
        }
        kind = "hqmm"
    elif isinstance(model, OpenSystemModel):
        spec = model.spec
        body = {
            "dim": spec.dim,
            "h_int": _encode_complex_matrix(spec.h_int),
            "dt": spec.dt,
            "channels": [
                {
                    "symbol": ch.symbol,
                    "feedback": _encode_complex_matrix(ch.feedback),
                    "terms": [
                        {"xi": _encode_complex(t.amplitude),
                         "L": _encode_complex_matrix(t.operator)}
                        for t in ch.terms
                    ],
                }
                for ch in spec.channels
            ],
            "initial": _encode_complex_matrix(model.initial.mat),
        }
        kind = "open_system"
    else:
        raise ModelFormatError(f"cannot serialize object of type {type(model).__name__}")
    return {"format_version": FORMAT_VERSION, "kind": kind, kind: body}


def write_model(model, path) -> None:
    Path(path).write_text(
        json.dumps(serialize_model(model), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def file_digest(path) -> str:
    """SHA-256 hex digest of the file bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
