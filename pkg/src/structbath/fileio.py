"""Configuration documents, output tables, manifests and graymap rendering.

Numbers are written with 17 significant digits so every double survives a
write/read cycle unchanged.  Missing cells are written as ``nan``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .comparators import EprModel, HeomModes, TnChain
from .errors import ParseError, SchemaError, ValidationError
from .network import NetworkSpec, PumpSpec, validate
from .selfenergy import SpectrumTrace
from .sweep import SweepAxis, SweepResult

__all__ = [
    "CONFIG_SCHEMA",
    "parse_config",
    "dump_config",
    "config_to_json",
    "parse_model",
    "write_spectrum",
    "read_spectrum",
    "write_grid",
    "read_grid",
    "write_ridge",
    "read_ridge",
    "write_sweep",
    "write_manifest",
    "read_manifest",
    "GridFile",
    "Graymap",
    "render_heatmap",
    "read_pgm",
]

SPECTRUM_COLUMNS = ("omega_ghz", "re_sigma", "im_sigma", "re_gss", "im_gss",
                    "re_gtransfer", "im_gtransfer", "gain")
GRID_MAGIC = "# structbath-grid v1"

_NUMBER = {"type": "number"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["nodes", "system", "couplings"],
    "properties": {
        "nodes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["label", "omega_ghz", "gamma"],
                "properties": {"label": {"type": "string"}, "omega_ghz": _NUMBER, "gamma": _NUMBER},
            },
        },
        "system": {"type": "string"},
        "couplings": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["a", "b", "j_ghz"],
                "properties": {"a": {"type": "string"}, "b": {"type": "string"}, "j_ghz": _NUMBER},
            },
        },
        "pump": {
            "type": "object",
            "additionalProperties": False,
            "required": ["edge", "g", "p"],
            "properties": {
                "edge": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
                "g": _NUMBER,
                "p": _NUMBER,
                "delta_omega3": _NUMBER,
            },
        },
    },
}

_MODEL_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {
            "additionalProperties": False,
            "required": ["kind", "modes"],
            "properties": {
                "kind": {"const": "heom"},
                "modes": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["c_re", "gamma"],
                        "properties": {"c_re": _NUMBER, "c_im": _NUMBER, "gamma": _NUMBER},
                    },
                },
            },
        },
        {
            "additionalProperties": False,
            "required": ["kind", "lambda", "eps"],
            "properties": {
                "kind": {"const": "tn"},
                "lambda": _NUMBER,
                "eps": {"type": "array", "items": _NUMBER, "minItems": 1},
                "hop": {"type": "array", "items": _NUMBER},
                "eta": _NUMBER,
            },
        },
        {
            "additionalProperties": False,
            "required": ["kind", "elements"],
            "properties": {
                "kind": {"const": "epr"},
                "elements": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["energy", "participation"],
                        "properties": {"energy": _NUMBER, "participation": _NUMBER},
                    },
                },
            },
        },
    ],
}


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


def _load_json(document):
    if isinstance(document, dict):
        return document
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        return json.loads(document, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _json_path(parts) -> str:
    out = "$"
    for part in parts:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def _check_schema(doc, schema):
    validator = jsonschema.Draft202012Validator(schema)
    error = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if error is not None:
        message = error.message
        if error.validator == "additionalProperties":
            message = "unknown field(s): " + message.split("(")[-1].rstrip(")")
        raise SchemaError(message, _json_path(error.absolute_path))


def parse_config(document):
    """Parse a network document into ``(NetworkSpec, PumpSpec or None)``.

    ``document`` is a JSON string, bytes or an already-decoded dict.

    Raises
    ------
    ParseError
        Malformed JSON (with line and column).
    SchemaError
        Missing, mistyped or unknown fields (with a ``$.path``).
    ValidationError
        Network or pump invariants violated.
    """
    doc = _load_json(document)
    _check_schema(doc, CONFIG_SCHEMA)
    nodes = doc["nodes"]
    spec = NetworkSpec(
        labels=tuple(n["label"] for n in nodes),
        omega=tuple(n["omega_ghz"] for n in nodes),
        gamma=tuple(n["gamma"] for n in nodes),
        couplings=tuple((c["a"], c["b"], c["j_ghz"]) for c in doc["couplings"]),
        system=doc["system"],
    )
    problems = validate(spec)
    pump = None
    if "pump" in doc:
        pd = doc["pump"]
        pump = PumpSpec(tuple(pd["edge"]), pd["g"], pd["p"], pd.get("delta_omega3", 0.0))
        if not problems:
            problems = pump.problems(spec)
    if problems:
        raise ValidationError(problems)
    return spec, pump


def dump_config(spec: NetworkSpec, pump: PumpSpec | None = None) -> dict:
    """Inverse of :func:`parse_config`."""
    doc = {
        "nodes": [
            {"label": lab, "omega_ghz": w, "gamma": g}
            for lab, w, g in zip(spec.labels, spec.omega, spec.gamma)
        ],
        "system": spec.system,
        "couplings": [{"a": a, "b": b, "j_ghz": j} for a, b, j in spec.couplings],
    }
    if pump is not None:
        doc["pump"] = {"edge": list(pump.edge), "g": pump.g, "p": pump.p,
                       "delta_omega3": pump.delta_omega3}
    return doc


def config_to_json(spec: NetworkSpec, pump: PumpSpec | None = None) -> str:
    return json.dumps(dump_config(spec, pump), indent=2) + "\n"


def parse_model(document):
    """Parse a comparator document into a model and its options.

    Returns ``(kind, model, options)`` where ``kind`` is ``heom``, ``tn`` or
    ``epr`` and ``options`` holds extras such as the chain broadening ``eta``.
    """
    doc = _load_json(document)
    if isinstance(doc, dict) and doc.get("kind") in ("heom", "tn", "epr"):
        # narrow to the matching branch for a precise error path
        branch = {"heom": 0, "tn": 1, "epr": 2}[doc["kind"]]
        _check_schema(doc, _MODEL_SCHEMA["oneOf"][branch])
    else:
        _check_schema(doc, {"type": "object", "required": ["kind"],
                            "properties": {"kind": {"enum": ["heom", "tn", "epr"]}}})
    kind = doc["kind"]
    try:
        if kind == "heom":
            model = HeomModes(tuple(complex(m["c_re"], m.get("c_im", 0.0)) for m in doc["modes"]),
                              tuple(m["gamma"] for m in doc["modes"]))
            return kind, model, {}
        if kind == "tn":
            model = TnChain(doc["lambda"], tuple(doc["eps"]), tuple(doc.get("hop", ())))
            return kind, model, {"eta": float(doc.get("eta", 0.0))}
        model = EprModel(tuple(e["energy"] for e in doc["elements"]),
                         tuple(e["participation"] for e in doc["elements"]))
        return kind, model, {}
    except ValueError as exc:
        raise SchemaError(str(exc), "$") from exc


# -- delimited text -------------------------------------------------------------

def _fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def _open_sink(sink, mode="w"):
    if hasattr(sink, "write") or hasattr(sink, "read"):
        return sink, False
    return open(sink, mode, newline="", encoding="utf-8"), True


def write_spectrum(trace: SpectrumTrace, sink) -> None:
    """Write a spectrum table (header plus one row per frequency)."""
    if len(trace) == 0:
        raise ValueError("empty spectrum trace")
    fh, close = _open_sink(sink)
    try:
        fh.write(",".join(SPECTRUM_COLUMNS) + "\n")
        for k in range(len(trace)):
            s, g, t = trace.sigma[k], trace.g_ss[k], trace.g_transfer[k]
            row = (trace.omega[k], s.real, s.imag, g.real, g.imag, t.real, t.imag, trace.gain[k])
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    finally:
        if close:
            fh.close()


def read_spectrum(source) -> SpectrumTrace:
    fh, close = _open_sink(source, "r")
    try:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != SPECTRUM_COLUMNS:
            raise ValueError(f"unexpected spectrum header {header}")
        data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    finally:
        if close:
            fh.close()
    data = data.reshape(-1, len(SPECTRUM_COLUMNS))
    return SpectrumTrace(
        omega=data[:, 0],
        sigma=data[:, 1] + 1j * data[:, 2],
        g_ss=data[:, 3] + 1j * data[:, 4],
        g_transfer=data[:, 5] + 1j * data[:, 6],
        gain=data[:, 7],
    )


@dataclass(frozen=True)
class GridFile:
    """Header and row-major gain values of a sweep grid."""

    axis: str
    axis_values: np.ndarray
    omega_grid: np.ndarray
    preset: str
    pump: dict
    values: np.ndarray

    @classmethod
    def from_result(cls, result: SweepResult) -> "GridFile":
        return cls(result.axis.parameter, np.asarray(result.axis.values), result.omega_grid,
                   str(result.meta.get("preset", "")), dict(result.meta.get("pump", {})),
                   result.grid)


def write_grid(grid: GridFile, sink) -> None:
    fh, close = _open_sink(sink)
    try:
        fh.write(GRID_MAGIC + "\n")
        fh.write(f"# axis: {grid.axis}\n")
        fh.write("# axis_values: " + ",".join(_fmt(v) for v in grid.axis_values) + "\n")
        fh.write("# omega_ghz: " + ",".join(_fmt(v) for v in grid.omega_grid) + "\n")
        fh.write(f"# preset: {grid.preset}\n")
        fh.write("# pump: " + json.dumps(grid.pump, sort_keys=True) + "\n")
        for row in np.asarray(grid.values):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    finally:
        if close:
            fh.close()


def read_grid(source) -> GridFile:
    fh, close = _open_sink(source, "r")
    try:
        lines = fh.read().splitlines()
    finally:
        if close:
            fh.close()
    if not lines or lines[0] != GRID_MAGIC:
        raise ValueError("not a structbath grid file")
    head = {}
    body = []
    for line in lines[1:]:
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            head[key] = value
        elif line:
            body.append([float(v) for v in line.split(",")])
    omega = np.array([float(v) for v in head["omega_ghz"].split(",")])
    axis_values = np.array([float(v) for v in head["axis_values"].split(",")])
    values = np.array(body, dtype=float).reshape(len(axis_values), len(omega))
    return GridFile(head["axis"], axis_values, omega, head.get("preset", ""),
                    json.loads(head.get("pump", "{}")), values)


def write_ridge(result: SweepResult, sink) -> None:
    fh, close = _open_sink(sink)
    try:
        fh.write("axis_value,ridge_omega_ghz\n")
        for v, r in zip(result.axis.values, result.ridge):
            fh.write(f"{_fmt(v)},{_fmt(r)}\n")
    finally:
        if close:
            fh.close()


def read_ridge(source):
    fh, close = _open_sink(source, "r")
    try:
        rows = list(csv.reader(fh))
    finally:
        if close:
            fh.close()
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float).reshape(-1, 2)
    return data[:, 0], data[:, 1]


def write_manifest(manifest: dict, path) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_sweep(result: SweepResult, out_dir, manifest: dict | None = None) -> dict:
    """Write ``grid.txt``, ``ridge.csv`` and ``manifest.json`` into ``out_dir``.

    Returns the written paths keyed by role.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"grid": out / "grid.txt", "ridge": out / "ridge.csv", "manifest": out / "manifest.json"}
    write_grid(GridFile.from_result(result), paths["grid"])
    write_ridge(result, paths["ridge"])
    doc = dict(manifest or {})
    doc.setdefault("meta", {k: v for k, v in result.meta.items()})
    doc["outputs"] = {k: os.fspath(v.name) for k, v in paths.items()}
    write_manifest(doc, paths["manifest"])
    return paths


# -- graymap ----------------------------------------------------------------------

@dataclass(frozen=True)
class Graymap:
    """8-bit image; rows are axis values, columns are frequencies."""

    pixels: np.ndarray

    def to_bytes(self) -> bytes:
        h, w = self.pixels.shape
        return f"P5\n{w} {h}\n255\n".encode("ascii") + self.pixels.astype(np.uint8).tobytes()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())


def render_heatmap(grid, scale: str = "linear") -> Graymap:
    """Map a gain grid affinely onto 0..255.

    ``grid`` is a :class:`GridFile`, a :class:`SweepResult` or a 2-D array.
    The smallest present cell maps to 0 and the largest to 255 (on a log10
    axis for ``scale="log"``).  Missing cells render as 0.  A constant grid
    renders uniform mid-gray (128), except an all-zero grid, which stays 0.
    """
    if isinstance(grid, (GridFile, SweepResult)):
        values = grid.values if isinstance(grid, GridFile) else grid.grid
    else:
        values = grid
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.size == 0:
        raise ValueError("heatmap needs a nonempty 2-D grid")
    present = ~np.isnan(values)
    if not present.any():
        raise ValueError("heatmap grid has no present cells")
    if scale == "log":
        if np.any(values[present] <= 0):
            raise ValueError("log scale needs strictly positive cells")
        data = np.where(present, np.log10(np.where(present, values, 1.0)), np.nan)
    elif scale == "linear":
        data = values
    else:
        raise ValueError(f"unknown color scale {scale!r}")
    lo, hi = data[present].min(), data[present].max()
    pixels = np.zeros(values.shape, dtype=np.uint8)
    if hi == lo:
        level = 0 if (scale == "linear" and lo == 0.0) else 128
        pixels[present] = level
    else:
        scaled = np.floor((data[present] - lo) / (hi - lo) * 255.0 + 0.5)
        pixels[present] = np.clip(scaled, 0, 255).astype(np.uint8)
    return Graymap(pixels)


def read_pgm(source) -> np.ndarray:
    data = Path(source).read_bytes() if not isinstance(source, (bytes, bytearray)) else bytes(source)
    stream = io.BytesIO(data)
    fields = []
    while len(fields) < 4:
        line = stream.readline()
        if not line:
            raise ValueError("truncated PGM header")
        fields += line.split(b"#")[0].split()
    if fields[0] != b"P5" or int(fields[3]) != 255:
        raise ValueError("only 8-bit binary PGM is supported")
    w, h = int(fields[1]), int(fields[2])
    return np.frombuffer(stream.read(w * h), dtype=np.uint8).reshape(h, w)
