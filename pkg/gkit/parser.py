"""Readers and writers for the JSON and CSV files gkit consumes and emits.

Every writer is a fixed point of its reader: parsing an emitted file and
emitting it again gives the same bytes.
"""
import csv
import io
import json
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from gkit.exceptions import DimensionMismatch, ParseError
from gkit.fubini import MultilinearForm
from gkit.helpers import regex_search
from gkit.kernels import Kernel, QuadratureGrid, Rule, tabulated_grid
from gkit.spaces import BilinearForm, SpaceSpec, TensorElement, space

logger = logging.getLogger(__name__)

SCHEMA = 1


def _check_schema(obj: Dict[str, Any]) -> None:
    schema = obj.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ParseError(f"unsupported schema {schema!r}, expected {SCHEMA}")


def parse_json(text: str) -> Dict[str, Any]:
    """Decode a JSON document into a dict.

    :param str text:
        The raw file contents.
    :rtype: dict
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"invalid JSON: {err}")
    if not isinstance(obj, dict):
        raise ParseError("top-level JSON value must be an object")
    _check_schema(obj)
    return obj


def dump_json(obj: Dict[str, Any]) -> str:
    """Canonical JSON: sorted keys, schema stamp, trailing newline."""
    return json.dumps({"schema": SCHEMA, **obj}, sort_keys=True, indent=2) + "\n"


def read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err.strerror}")


def _space_from(obj: Dict[str, Any], key: str, dim: int) -> SpaceSpec:
    raw = obj.get(key, "l2")
    if isinstance(raw, dict):
        return space(raw.get("norm", "l2"), dim, raw.get("weights"))
    weights = obj.get(key.replace("domain", "weights"))
    return space(str(raw), dim, weights)


def _space_to(spec: SpaceSpec, obj: Dict[str, Any], key: str) -> None:
    obj[key] = spec.tag
    if spec.weights is not None:
        obj[key.replace("domain", "weights")] = list(spec.weights)


def _matrix(raw, caller: str) -> np.ndarray:
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{caller}: entries must be a numeric matrix")
    if arr.ndim != 2:
        raise ParseError(f"{caller}: entries must be a matrix")
    return arr


def form_from_dict(obj: Dict[str, Any]) -> BilinearForm:
    """``{"rows", "cols", "entries", "domain_e", "domain_f", "weights_e"?, ...}``."""
    if "entries" not in obj:
        raise ParseError("form needs an 'entries' matrix")
    arr = _matrix(obj["entries"], "form")
    rows, cols = int(obj.get("rows", arr.shape[0])), int(obj.get("cols", arr.shape[1]))
    if arr.shape != (rows, cols):
        raise DimensionMismatch("form_from_dict", (rows, cols), arr.shape)
    return BilinearForm(
        arr,
        _space_from(obj, "domain_e", rows),
        _space_from(obj, "domain_f", cols),
    )


def form_to_dict(phi: BilinearForm) -> Dict[str, Any]:
    out = {
        "rows": phi.shape[0],
        "cols": phi.shape[1],
        "entries": phi.coeffs.tolist(),
    }
    _space_to(phi.domain_e, out, "domain_e")
    _space_to(phi.domain_f, out, "domain_f")
    return out


def element_from_dict(
    obj: Dict[str, Any], spaces: Optional[Tuple[SpaceSpec, SpaceSpec]] = None
) -> TensorElement:
    """``{"terms": [{"e": [...], "f": [...]}, ...]}``.

    Spaces come from the paired form when given, else from the element's
    own ``domain_e``/``domain_f`` keys and its first term.
    """
    terms = obj.get("terms")
    if not isinstance(terms, list):
        raise ParseError("element needs a 'terms' list")
    try:
        pairs = [(np.asarray(t["e"], dtype=float), np.asarray(t["f"], dtype=float)) for t in terms]
    except (KeyError, TypeError, ValueError):
        raise ParseError("each term needs numeric 'e' and 'f' vectors")
    if spaces is None:
        if "dims" in obj:
            dims = tuple(int(d) for d in obj["dims"])
        elif pairs:
            dims = (len(pairs[0][0]), len(pairs[0][1]))
        else:
            raise ParseError("empty element needs 'dims' or a paired form")
        spaces = (_space_from(obj, "domain_e", dims[0]), _space_from(obj, "domain_f", dims[1]))
    return TensorElement(tuple(pairs), spaces)


def element_to_dict(x: TensorElement) -> Dict[str, Any]:
    out = {
        "dims": [s.dim for s in x.spaces],
        "terms": [{"e": e.tolist(), "f": f.tolist()} for e, f in x.terms],
    }
    _space_to(x.spaces[0], out, "domain_e")
    _space_to(x.spaces[1], out, "domain_f")
    return out


def multilinear_from_dict(obj: Dict[str, Any]) -> MultilinearForm:
    """``{"dims": [...], "entries": flat row-major, "spaces": [...]}``."""
    try:
        dims = tuple(int(d) for d in obj["dims"])
        entries = np.asarray(obj["entries"], dtype=float).ravel()
    except (KeyError, TypeError, ValueError):
        raise ParseError("multilinear form needs integer 'dims' and numeric 'entries'")
    if entries.size != int(np.prod(dims)):
        raise DimensionMismatch("multilinear_from_dict", int(np.prod(dims)), entries.size)
    raw_spaces = obj.get("spaces", ["linf"] * len(dims))
    if len(raw_spaces) != len(dims):
        raise DimensionMismatch("multilinear_from_dict", len(dims), len(raw_spaces))
    spaces = []
    for raw, dim in zip(raw_spaces, dims):
        if isinstance(raw, dict):
            spaces.append(space(raw.get("norm", "l2"), dim, raw.get("weights")))
        else:
            spaces.append(space(str(raw), dim))
    return MultilinearForm(entries.reshape(dims), tuple(spaces))


def multilinear_to_dict(mu: MultilinearForm) -> Dict[str, Any]:
    return {
        "dims": list(mu.shape),
        "entries": mu.tensor.ravel().tolist(),
        "spaces": [s.to_dict() if s.weights is not None else s.tag for s in mu.spaces],
    }


def vectors_from_dict(obj: Dict[str, Any], key: str = "vectors") -> List[np.ndarray]:
    try:
        return [np.asarray(v, dtype=float) for v in obj[key]]
    except (KeyError, TypeError, ValueError):
        raise ParseError(f"expected a list of numeric vectors under {key!r}")


def _fmt(value: float) -> str:
    return repr(float(value))


def _floats(row: Sequence[str], caller: str) -> List[float]:
    try:
        return [float(v) for v in row]
    except ValueError:
        raise ParseError(f"{caller}: non-numeric cell in {row[:3]!r}")


def _grid_row(label: str, grid: QuadratureGrid) -> List[str]:
    return [label, grid.rule.value, _fmt(grid.a), _fmt(grid.b)]


def write_kernel_csv(k: Kernel) -> str:
    """Header rows for both grids, optional grid metadata, then the value matrix."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x_points"] + [_fmt(v) for v in k.grid_x.points])
    writer.writerow(["x_weights"] + [_fmt(v) for v in k.grid_x.weights])
    writer.writerow(["y_points"] + [_fmt(v) for v in k.grid_y.points])
    writer.writerow(["y_weights"] + [_fmt(v) for v in k.grid_y.weights])
    writer.writerow(_grid_row("x_grid", k.grid_x))
    writer.writerow(_grid_row("y_grid", k.grid_y))
    for row in k.values:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _grid_from(points, weights, meta: Optional[List[str]]) -> QuadratureGrid:
    if meta is None:
        return tabulated_grid(points, weights)
    try:
        rule = Rule(meta[0])
        a, b = float(meta[1]), float(meta[2])
    except (IndexError, ValueError):
        raise ParseError(f"bad grid metadata {meta!r}")
    return QuadratureGrid(points, weights, rule, a, b)


def read_kernel_csv(text: str, name: str = "table") -> Kernel:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    labelled = {}
    matrix = []
    for row in rows:
        if row[0] in ("x_points", "x_weights", "y_points", "y_weights", "x_grid", "y_grid"):
            labelled[row[0]] = row[1:]
        else:
            matrix.append(_floats(row, "kernel csv"))
    for label in ("x_points", "x_weights", "y_points", "y_weights"):
        if label not in labelled:
            raise ParseError(f"kernel csv is missing the {label} row")
    gx = _grid_from(
        _floats(labelled["x_points"], "x_points"),
        _floats(labelled["x_weights"], "x_weights"),
        labelled.get("x_grid"),
    )
    gy = _grid_from(
        _floats(labelled["y_points"], "y_points"),
        _floats(labelled["y_weights"], "y_weights"),
        labelled.get("y_grid"),
    )
    try:
        values = np.array(matrix, dtype=float)
    except ValueError:
        raise ParseError("kernel csv rows have unequal length")
    return Kernel(gx, gy, values, name)


def write_witness_csv(u: np.ndarray, v: np.ndarray) -> str:
    """``d=<rank>`` header, then one ``u,...`` row per u_i and one ``v,...`` row per v_j."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"d={u.shape[1]}"])
    for label, block in (("u", u), ("v", v)):
        for row in block:
            writer.writerow([label] + [_fmt(x) for x in row])
    return buf.getvalue()


def read_witness_csv(text: str) -> Tuple[np.ndarray, np.ndarray]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise ParseError("witness csv is empty")
    rank = int(regex_search(r"^d=(\d+)$", rows[0][0], group=1))
    blocks = {"u": [], "v": []}
    for row in rows[1:]:
        if row[0] not in blocks:
            raise ParseError(f"witness row label must be u or v, got {row[0]!r}")
        values = _floats(row[1:], "witness csv")
        if len(values) != rank:
            raise DimensionMismatch("read_witness_csv", rank, len(values))
        blocks[row[0]].append(values)
    return (
        np.array(blocks["u"], dtype=float).reshape(-1, rank),
        np.array(blocks["v"], dtype=float).reshape(-1, rank),
    )


def load_form(path: str) -> BilinearForm:
    return form_from_dict(parse_json(read_text(path)))


def load_element(path: str, spaces=None) -> TensorElement:
    return element_from_dict(parse_json(read_text(path)), spaces)


def load_kernel(path: str) -> Kernel:
    return read_kernel_csv(read_text(path), name=path)
