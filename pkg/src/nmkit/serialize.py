"""Deterministic serialization for CLI outputs and wire formats.

Floats are written with 17 significant digits and lowercase e-notation so
repeated runs produce byte-identical files.  Complex matrices travel as
row-major lists of ``[re, im]`` pairs.
"""

import math

import numpy as np

from .errors import ValidationError


def fmt_float(x) -> str:
    """Format one float with 17 significant digits, lowercase exponent."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_fragments(obj, indent: int, out: list):
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, str):
        escaped = obj.replace("\\", "\\\\").replace('"', '\\"')
        out.append(f'"{escaped}"')
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        out.append("null" if math.isnan(x) else fmt_float(x))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.append(f'{pad}  "{key}": ')
            _json_fragments(value, indent + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, value in enumerate(seq):
            out.append(pad + "  ")
            _json_fragments(value, indent + 1, out)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(pad + "]")
    else:
        raise ValidationError(f"cannot serialize object of type {type(obj).__name__}")


def dumps_json(obj) -> str:
    """Deterministic JSON text (insertion-ordered keys, fixed float format)."""
    out = []
    _json_fragments(obj, 0, out)
    out.append("\n")
    return "".join(out)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))


def csv_cell(value) -> str:
    """One CSV cell; NaN floats become blank (gap markers)."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    return "" if math.isnan(x) else fmt_float(x)


def write_csv(path, header, rows):
    """Comma-separated file with '.' decimals and a mandatory header row."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(csv_cell(cell) for cell in row) + "\n")


def cmatrix_to_pairs(m) -> list:
    """Row-major [re, im] pair list of a complex matrix."""
    m = np.asarray(m, dtype=complex)
    return [[float(z.real), float(z.imag)] for z in m.ravel(order="C")]


def cmatrix_from_pairs(pairs, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`cmatrix_to_pairs`."""
    pairs = list(pairs)
    if len(pairs) != rows * cols:
        raise ValidationError(
            f"matrix entry list has {len(pairs)} entries, expected {rows * cols}"
        )
    flat = np.array([complex(p[0], p[1]) for p in pairs], dtype=complex)
    return flat.reshape(rows, cols)
