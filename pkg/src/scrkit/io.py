"""File formats and run persistence.

Designs and reports are JSON with unit-suffixed field names; traces, sweeps
and tables are CSV with a header row. Everything is converted to SI on load.
"""

from dataclasses import asdict, dataclass, field
import csv
import datetime as _dt
import hashlib
from importlib import resources
import json
import math
import os
from pathlib import Path
import re

import numpy as np

from .circuit import COMMON, DIFFERENTIAL, CircuitDesign
from .electrons import LeverArms
from .errors import ParseError, ValidationError
from .materials import sheet_inductance, wire_inductance
from .resonance import S21Trace

RUN_ROOT_ENV = "SCRKIT_RUN_ROOT"

# file field -> (model attribute, SI factor, positive-only)
DESIGN_FIELDS = {
    "length_mm": ("length", 1e-3, True),
    "width_um": ("width", 1e-6, True),
    "c_a_fF": ("C_a", 1e-15, True),
    "c_b_fF": ("C_b", 1e-15, True),
    "c_x_fF": ("C_x", 1e-15, False),
    "c_ca_fF": ("C_ca", 1e-15, False),
    "c_cb_fF": ("C_cb", 1e-15, False),
    "l_nH": ("L", 1e-9, True),
    "l_t_nH": ("L_t", 1e-9, False),
}
_REQUIRED = ("name", "length_mm", "width_um", "c_a_fF", "c_b_fF", "c_x_fF", "c_ca_fF", "c_cb_fF")
_FILM_FIELDS = {"r_sq_ohm", "t_c_K", "l_sq_pH"}
_TOP_FIELDS = {"designs", "film"}

TRACE_FORMATS = {
    "reim": ("frequency_hz", "re", "im"),
    "dbphase": ("frequency_hz", "magnitude_db", "phase_rad"),
}

REFERENCE_HEADER = ("name", "mode", "frequency_ghz")
ARMS_HEADER = ("electron", "da_dx_per_um", "db_dx_per_um", "da_dy_per_um", "db_dy_per_um")


def data_path(name="tableI.json"):
    """Path of a data file shipped with the package."""
    return Path(str(resources.files("scrkit") / "data" / name))


def table_i():
    """The nine reference designs shipped as ``tableI.json``."""
    return load_designs(data_path("tableI.json"))


# ---------------------------------------------------------------------------
# helpers


def _line_of(text, offset):
    return text.count("\n", 0, offset) + 1


def _array_item_offsets(text, start):
    """Character offsets of each element of the JSON array opening at ``start``."""
    dec = json.JSONDecoder()
    ws = re.compile(r"[ \t\n\r]*")
    i = ws.match(text, start + 1).end()
    out = []
    if text[i : i + 1] == "]":
        return out
    while True:
        out.append(i)
        _, i = dec.raw_decode(text, i)
        i = ws.match(text, i).end()
        if text[i : i + 1] == ",":
            i = ws.match(text, i + 1).end()
            continue
        return out


def _key_line(text, obj_offset, key):
    m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, obj_offset)
    return _line_of(text, m.start()) if m else _line_of(text, obj_offset)


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _fmt(x):
    """Shortest round-tripping text for a number."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None  # JSON has no inf/nan
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps_json(obj):
    """Deterministic JSON text (fixed indentation and key order, trailing newline)."""
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# designs


def _film_l_sq(film, text, where):
    unknown = sorted(set(film) - _FILM_FIELDS)
    if unknown:
        raise ParseError(f"line {where}: unknown film field {unknown[0]!r}")
    if "l_sq_pH" in film:
        v = film["l_sq_pH"]
        if not _is_number(v):
            raise ParseError(f"line {where}: film field 'l_sq_pH' must be a number")
        if not v > 0:
            raise ValidationError(f"line {where}: film field 'l_sq_pH' must be positive, got {v!r}")
        return v * 1e-12
    if "r_sq_ohm" in film and "t_c_K" in film:
        for k in ("r_sq_ohm", "t_c_K"):
            if not _is_number(film[k]):
                raise ParseError(f"line {where}: film field {k!r} must be a number")
            if not film[k] > 0:
                raise ValidationError(f"line {where}: film field {k!r} must be positive, got {film[k]!r}")
        return sheet_inductance(film["r_sq_ohm"], film["t_c_K"])
    raise ParseError(f"line {where}: film needs 'l_sq_pH' or both 'r_sq_ohm' and 't_c_K'")


def parse_designs(text, source="<string>"):
    """Parse design-file text; see :func:`load_designs`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno}: invalid JSON ({exc.msg})") from exc

    l_sq = None
    if isinstance(doc, list):
        items, arr = doc, text.index("[")
    elif isinstance(doc, dict):
        unknown = sorted(set(doc) - _TOP_FIELDS)
        if unknown:
            raise ParseError(f"{source}: line {_key_line(text, 0, unknown[0])}: unknown field {unknown[0]!r}")
        items = doc.get("designs", [])
        if not isinstance(items, list):
            raise ParseError(f"{source}: line {_key_line(text, 0, 'designs')}: 'designs' must be a list")
        m = re.search(r'"designs"\s*:\s*\[', text)
        arr = m.end() - 1 if m else 0
        if "film" in doc:
            if not isinstance(doc["film"], dict):
                raise ParseError(f"{source}: line {_key_line(text, 0, 'film')}: 'film' must be an object")
            l_sq = _film_l_sq(doc["film"], text, _key_line(text, 0, "film"))
    else:
        raise ParseError(f"{source}: line 1: expected a list of designs or an object with 'designs'")

    offsets = _array_item_offsets(text, arr) if items else []
    designs = []
    seen = set()
    for rec, off in zip(items, offsets):
        line = _line_of(text, off)
        if not isinstance(rec, dict):
            raise ParseError(f"{source}: line {line}: design entry must be an object")
        for k in rec:
            if k != "name" and k not in DESIGN_FIELDS:
                raise ParseError(f"{source}: line {_key_line(text, off, k)}: unknown field {k!r}")
        for k in _REQUIRED:
            if k not in rec:
                raise ParseError(f"{source}: line {line}: missing required field {k!r}")
        name = rec["name"]
        if not isinstance(name, str) or not name:
            raise ParseError(f"{source}: line {_key_line(text, off, 'name')}: field 'name' must be a non-empty string")
        if name in seen:
            raise ValidationError(f"{source}: line {_key_line(text, off, 'name')}: duplicate design name {name!r}")
        seen.add(name)

        kw = {}
        for k, (attr, scale, positive) in DESIGN_FIELDS.items():
            if k not in rec:
                continue
            v = rec[k]
            kl = _key_line(text, off, k)
            if not _is_number(v):
                raise ParseError(f"{source}: line {kl}: field {k!r} must be a number")
            ok = v > 0 if positive else v >= 0
            if not (ok and math.isfinite(v)):
                need = "positive" if positive else "non-negative"
                raise ValidationError(f"{source}: line {kl}: design {name!r}: {k} ({attr}) must be {need}, got {v!r}")
            kw[attr] = v * scale
        if "L" not in kw:
            if l_sq is None:
                raise ParseError(f"{source}: line {line}: design {name!r} has no 'l_nH' and the file has no film data")
            kw["L"] = wire_inductance(l_sq, kw["length"], kw["width"])
        designs.append(CircuitDesign(name=name, **kw))
    return designs


def load_designs(path):
    """Load a designs file.

    Accepts a JSON list of design objects, or an object ``{"designs": [...],
    "film": {...}}``. Each design carries ``name`` and the unit-suffixed
    fields of ``DESIGN_FIELDS``; ``l_t_nH`` defaults to zero and ``l_nH`` may
    be omitted when the film block gives ``l_sq_pH`` or ``r_sq_ohm`` and
    ``t_c_K``.

    Raises
    ------
    ParseError
        Malformed JSON, unknown or missing fields, wrong types.
    ValidationError
        Out-of-range values; the message names the field and line.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_designs(text, str(path))


def designs_document(designs):
    recs = []
    for d in designs:
        rec = {"name": d.name}
        for k, (attr, scale, _) in DESIGN_FIELDS.items():
            rec[k] = getattr(d, attr) / scale
        recs.append(rec)
    return {"designs": recs}


def save_designs(designs, path):
    Path(path).write_text(dumps_json(designs_document(designs)))


# ---------------------------------------------------------------------------
# traces


def _read_csv(path):
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh))]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    rows = [(n, r) for n, r in rows if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = tuple(c.strip() for c in rows[0][1])
    return path, header, rows[1:]


def _floats(path, lineno, cells, ncol):
    if len(cells) != ncol:
        raise ParseError(f"{path}: line {lineno}: expected {ncol} columns, got {len(cells)}")
    try:
        return [float(c) for c in cells]
    except ValueError as exc:
        raise ParseError(f"{path}: line {lineno}: {exc}") from exc


def load_trace(path, fmt="auto", power_in=None):
    """Load an S21 trace from CSV.

    ``fmt`` is ``"reim"`` (frequency_hz, re, im), ``"dbphase"``
    (frequency_hz, magnitude_db, phase_rad) or ``"auto"`` to pick from the
    header. Lines starting with ``#`` are ignored.
    """
    path, header, rows = _read_csv(path)
    if fmt not in ("auto", *TRACE_FORMATS):
        raise ParseError(f"unknown trace format {fmt!r}")
    cols = set(header)
    has_reim = bool(cols & {"re", "im"})
    has_db = bool(cols & {"magnitude_db", "phase_rad"})
    if has_reim and has_db:
        raise ParseError(f"{path}: line 1: header mixes re/im and magnitude/phase columns")
    found = next((k for k, h in TRACE_FORMATS.items() if header == h), None)
    if found is None:
        raise ParseError(f"{path}: line 1: unrecognized header {','.join(header)!r}")
    if fmt != "auto" and fmt != found:
        raise ParseError(f"{path}: line 1: header is {found!r} format but {fmt!r} was requested")

    data = np.array([_floats(path, n, r, 3) for n, r in rows]).reshape(-1, 3)
    if not np.all(np.isfinite(data)):
        bad = int(np.nonzero(~np.all(np.isfinite(data), axis=1))[0][0])
        raise ValidationError(f"{path}: row {bad + 1} (line {rows[bad][0]}): non-finite value")
    f = data[:, 0]
    steps = np.diff(f)
    bad = np.nonzero(steps <= 0)[0]
    if bad.size:
        i = int(bad[0]) + 1
        what = "duplicated" if steps[i - 1] == 0 else "decreasing"
        raise ValidationError(f"{path}: row {i + 1} (line {rows[i][0]}): {what} frequency {f[i]!r}")
    if found == "reim":
        s = data[:, 1] + 1j * data[:, 2]
    else:
        s = 10.0 ** (data[:, 1] / 20.0) * np.exp(1j * data[:, 2])
    return S21Trace(f, s, power_in)


def trace_csv(trace, fmt="reim"):
    if fmt == "reim":
        cols = (trace.frequencies, trace.values.real, trace.values.imag)
    elif fmt == "dbphase":
        cols = (trace.frequencies, 20 * np.log10(np.abs(trace.values)), np.angle(trace.values))
    else:
        raise ParseError(f"unknown trace format {fmt!r}")
    return csv_text(TRACE_FORMATS[fmt], zip(*cols))


# ---------------------------------------------------------------------------
# reference frequencies and lever arms


def load_reference(path):
    """``{(name, label): frequency_hz}`` from a CSV with columns name, mode, frequency_ghz."""
    path, header, rows = _read_csv(path)
    if header != REFERENCE_HEADER:
        raise ParseError(f"{path}: line 1: expected header {','.join(REFERENCE_HEADER)}")
    out = {}
    for n, r in rows:
        if len(r) != 3:
            raise ParseError(f"{path}: line {n}: expected 3 columns, got {len(r)}")
        name, label = r[0].strip(), r[1].strip()
        if label not in (COMMON, DIFFERENTIAL):
            raise ParseError(f"{path}: line {n}: mode must be {COMMON!r} or {DIFFERENTIAL!r}, got {label!r}")
        try:
            f = float(r[2])
        except ValueError as exc:
            raise ParseError(f"{path}: line {n}: {exc}") from exc
        if not (f > 0 and math.isfinite(f)):
            raise ValidationError(f"{path}: line {n}: frequency_ghz must be positive, got {f!r}")
        if (name, label) in out:
            raise ValidationError(f"{path}: line {n}: duplicate entry for {name} {label}")
        out[(name, label)] = f * 1e9
    return out


def reference_csv(reference):
    rows = [(n, lab, f / 1e9) for (n, lab), f in sorted(reference.items())]
    return csv_text(REFERENCE_HEADER, rows)


def load_lever_arms(path):
    """Lever-arm gradients per electron (1/um in the file, 1/m in the result).

    Columns ``electron, da_dx_per_um, db_dx_per_um`` are required, the two
    ``dy`` columns optional; electrons are numbered 1..n in order.
    """
    path, header, rows = _read_csv(path)
    if header not in (ARMS_HEADER, ARMS_HEADER[:3]):
        raise ParseError(f"{path}: line 1: expected header {','.join(ARMS_HEADER)} (dy columns optional)")
    vals = []
    for k, (n, r) in enumerate(rows):
        v = _floats(path, n, r, len(header))
        if v[0] != k + 1:
            raise ValidationError(f"{path}: line {n}: electrons must be numbered 1..n in order")
        vals.append(v[1:] + [0.0] * (5 - len(header)))
    if not vals:
        raise ValidationError(f"{path}: no electrons listed")
    a = np.array(vals) * 1e6
    return LeverArms(a[:, 0], a[:, 1], a[:, 2], a[:, 3])


# ---------------------------------------------------------------------------
# runs


@dataclass
class RunRecord:
    command: str
    inputs: dict  # file name -> sha256
    params: dict
    outputs: dict = field(default_factory=dict)  # file name -> sha256
    timestamp: str = ""
    version: str = ""

    def as_dict(self):
        return asdict(self)


def _timestamp():
    # SOURCE_DATE_EPOCH pins the clock for reproducible builds
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch else _dt.datetime.now(_dt.timezone.utc)
    return t.replace(microsecond=0).isoformat()


def run_directory(command, params, input_digests, root=None):
    """Deterministic run directory ``<root>/<command>-<hash>``.

    ``root`` defaults to ``$SCRKIT_RUN_ROOT`` and then ``./runs``. The hash
    covers the command, parameters and input digests, so repeating a run
    reuses its directory.
    """
    root = Path(root or os.environ.get(RUN_ROOT_ENV) or "runs")
    key = dumps_json({"command": command, "params": params, "inputs": input_digests})
    return root / f"{command}-{hashlib.sha256(key.encode()).hexdigest()[:12]}"


def write_run(run_dir, record, outputs):
    """Write ``outputs`` (name -> text) and ``run.json`` into ``run_dir``."""
    from . import __version__

    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    for name in sorted(outputs):
        data = outputs[name].encode()
        (run_dir / name).write_bytes(data)
        record.outputs[name] = hashlib.sha256(data).hexdigest()
    record.timestamp = record.timestamp or _timestamp()
    record.version = __version__
    (run_dir / "run.json").write_text(dumps_json(record.as_dict()))
    return run_dir
