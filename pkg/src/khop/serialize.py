"""Canonical JSON serialization for instances (format "khop-1").

The emitter is deliberately hand-rolled: keys are sorted, floats are printed
with 17 significant digits (always keeping a decimal point so they re-parse
as floats), objects go one entry per line and arrays stay on a single line.
Saving, loading and saving again reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .derivations import Derivation
from .errors import ParseError, ValidationError
from .instance import KINDS, Instance
from .kh_module import BlockStructure, ModuleSpace, direct_sum
from .measure_ring import AtomSpace
from .morphisms import AlgebraMorphism
from .operator_algebra import Operator

FORMAT_VERSION = "khop-1"


# --- canonical emitter ----------------------------------------------------

def _format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError("non-finite floats cannot be serialized")
    s = format(x, ".17g")
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def _emit_inline(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_emit_inline(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(
            json.dumps(str(k)) + ":" + _emit_inline(v) for k, v in items
        ) + "}"
    raise ValidationError(f"cannot serialize {type(obj).__name__}")


def _emit(obj, indent: int) -> str:
    pad = "  " * indent
    if isinstance(obj, dict) and obj:
        lines = ["{"]
        items = sorted(obj.items())
        for pos, (k, v) in enumerate(items):
            comma = "," if pos + 1 < len(items) else ""
            lines.append(
                f"{pad}  {json.dumps(str(k))}: {_emit(v, indent + 1)}{comma}"
            )
        lines.append(pad + "}")
        return "\n".join(lines)
    return _emit_inline(obj)


def canonical_json(doc: dict) -> str:
    """Render a document in the canonical byte-stable form."""
    return _emit(doc, 0) + "\n"


# --- scalar and matrix codecs ----------------------------------------------

def complex_to_pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def matrix_to_doc(mat: np.ndarray) -> dict:
    mat = np.asarray(mat, dtype=np.complex128)
    rows, cols = mat.shape
    return {
        "shape": [int(rows), int(cols)],
        "data": [complex_to_pair(v) for v in mat.reshape(-1)],
    }


def _need(doc, key: str, path: str):
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: expected an object")
    if key not in doc:
        raise ValidationError(f"{path}: missing key {key!r}")
    return doc[key]


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{path}: expected an integer")
    return value


def _as_pair(value, path: str) -> complex:
    if (not isinstance(value, list) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ValidationError(f"{path}: expected a [re, im] pair")
    return complex(float(value[0]), float(value[1]))


def doc_to_matrix(doc, path: str) -> np.ndarray:
    shape = _need(doc, "shape", path)
    if (not isinstance(shape, list) or len(shape) != 2):
        raise ValidationError(f"{path}.shape: expected [rows, cols]")
    rows = _as_int(shape[0], f"{path}.shape[0]")
    cols = _as_int(shape[1], f"{path}.shape[1]")
    data = _need(doc, "data", path)
    if not isinstance(data, list) or len(data) != rows * cols:
        raise ValidationError(f"{path}.data: expected {rows * cols} entries")
    flat = [_as_pair(v, f"{path}.data[{k}]") for k, v in enumerate(data)]
    return np.array(flat, dtype=np.complex128).reshape(rows, cols)


# --- structures -------------------------------------------------------------

def _atom_space_doc(space: AtomSpace) -> dict:
    return {"weights": [float(w) for w in space.weights]}


def _doc_atom_space(doc, path: str) -> AtomSpace:
    weights = _need(doc, "weights", path)
    if not isinstance(weights, list) or not weights:
        raise ValidationError(f"{path}.weights: expected a nonempty array")
    try:
        return AtomSpace(tuple(float(w) for w in weights))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}.weights: {exc}") from exc


def _structure_doc(structure) -> dict:
    if isinstance(structure, BlockStructure):
        return {
            "type": "block",
            "components": [list(c.fiber_dims) for c in structure.components],
        }
    return {"type": "module", "fiber_dims": list(structure.fiber_dims)}


def _doc_structure(doc, space: AtomSpace, path: str):
    kind = _need(doc, "type", path)
    if kind == "module":
        dims = _need(doc, "fiber_dims", path)
        return ModuleSpace(space, _dims_tuple(dims, space, f"{path}.fiber_dims"))
    if kind == "block":
        comps = _need(doc, "components", path)
        if not isinstance(comps, list) or not comps:
            raise ValidationError(f"{path}.components: expected a nonempty array")
        modules = [
            ModuleSpace(space, _dims_tuple(c, space, f"{path}.components[{i}]"))
            for i, c in enumerate(comps)
        ]
        return direct_sum(modules)
    raise ValidationError(f"{path}.type: unknown structure type {kind!r}")


def _dims_tuple(dims, space: AtomSpace, path: str) -> tuple[int, ...]:
    if not isinstance(dims, list) or len(dims) != space.atom_count:
        raise ValidationError(f"{path}: expected {space.atom_count} dims")
    return tuple(_as_int(d, f"{path}[{t}]") for t, d in enumerate(dims))


# --- payloads ---------------------------------------------------------------

def _operator_doc(op: Operator) -> dict:
    return {"blocks": [matrix_to_doc(b) for b in op.blocks]}


def _doc_operator(doc, domain: ModuleSpace, codomain: ModuleSpace,
                  path: str) -> Operator:
    blocks = _need(doc, "blocks", path)
    if not isinstance(blocks, list) or len(blocks) != domain.atom_count:
        raise ValidationError(f"{path}.blocks: expected {domain.atom_count} matrices")
    mats = [doc_to_matrix(b, f"{path}.blocks[{t}]") for t, b in enumerate(blocks)]
    for t, mat in enumerate(mats):
        expected = (codomain.fiber_dims[t], domain.fiber_dims[t])
        if mat.shape != expected:
            raise ValidationError(
                f"{path}.blocks[{t}]: shape {mat.shape} != {expected}"
            )
    return Operator(domain, codomain, tuple(mats))


def _derivation_doc(deriv: Derivation) -> dict:
    images = []
    for t, m in enumerate(deriv.module.fiber_dims):
        per_unit = [matrix_to_doc(deriv.images[t][r, s])
                    for r in range(m) for s in range(m)]
        images.append(per_unit)
    return {"images": images}


def _doc_derivation(doc, module: ModuleSpace, path: str) -> Derivation:
    images_doc = _need(doc, "images", path)
    if not isinstance(images_doc, list) or len(images_doc) != module.atom_count:
        raise ValidationError(f"{path}.images: expected {module.atom_count} atoms")
    tensors = []
    for t, m in enumerate(module.fiber_dims):
        per_unit = images_doc[t]
        if not isinstance(per_unit, list) or len(per_unit) != m * m:
            raise ValidationError(
                f"{path}.images[{t}]: expected {m * m} unit images"
            )
        tensor = np.zeros((m, m, m, m), dtype=np.complex128)
        for k, mat_doc in enumerate(per_unit):
            mat = doc_to_matrix(mat_doc, f"{path}.images[{t}][{k}]")
            if mat.shape != (m, m):
                raise ValidationError(
                    f"{path}.images[{t}][{k}]: shape {mat.shape} != {(m, m)}"
                )
            tensor[k // m, k % m] = mat
        tensors.append(tensor)
    return Derivation(module, tuple(tensors))


def _morphism_doc(m: AlgebraMorphism) -> dict:
    src = m.source_block
    images = []
    for t in range(src.space.atom_count):
        per_comp = []
        for i, comp in enumerate(src.components):
            d = comp.fiber_dims[t]
            per_comp.append([
                matrix_to_doc(m.images[t][i][r, s])
                for r in range(d) for s in range(d)
            ])
        images.append(per_comp)
    return {"images": images, "star_preserving": bool(m.star_preserving)}


def _doc_morphism(doc, structure, path: str) -> AlgebraMorphism:
    from .morphisms import as_block

    block = as_block(structure)
    star = _need(doc, "star_preserving", path)
    if not isinstance(star, bool):
        raise ValidationError(f"{path}.star_preserving: expected a boolean")
    images_doc = _need(doc, "images", path)
    if not isinstance(images_doc, list) or len(images_doc) != block.space.atom_count:
        raise ValidationError(
            f"{path}.images: expected {block.space.atom_count} atoms"
        )
    images = []
    for t in range(block.space.atom_count):
        per_comp_doc = images_doc[t]
        if (not isinstance(per_comp_doc, list)
                or len(per_comp_doc) != block.component_count):
            raise ValidationError(
                f"{path}.images[{t}]: expected {block.component_count} components"
            )
        n = block.sum_space.fiber_dims[t]
        per_comp = []
        for i, comp in enumerate(block.components):
            d = comp.fiber_dims[t]
            unit_docs = per_comp_doc[i]
            if not isinstance(unit_docs, list) or len(unit_docs) != d * d:
                raise ValidationError(
                    f"{path}.images[{t}][{i}]: expected {d * d} unit images"
                )
            tensor = np.zeros((d, d, n, n), dtype=np.complex128)
            for k, mat_doc in enumerate(unit_docs):
                mat = doc_to_matrix(mat_doc, f"{path}.images[{t}][{i}][{k}]")
                if mat.shape != (n, n):
                    raise ValidationError(
                        f"{path}.images[{t}][{i}][{k}]: shape {mat.shape} != {(n, n)}"
                    )
                tensor[k // d, k % d] = mat
            per_comp.append(tensor)
        images.append(tuple(per_comp))
    return AlgebraMorphism(structure, structure, tuple(images), star)


# --- instances ----------------------------------------------------------------

def instance_to_doc(inst: Instance) -> dict:
    """Flatten an instance into a plain JSON-ready document."""
    doc = {
        "version": FORMAT_VERSION,
        "kind": inst.kind,
        "atom_space": _atom_space_doc(inst.atom_space),
        "structure": _structure_doc(inst.structure),
        "metadata": {
            "seed": int(inst.seed),
            "params": inst.params,
            "ground_truth": (None if inst.ground_truth is None
                             else _operator_doc(inst.ground_truth)),
            "permutations": (None if inst.permutations is None
                             else [list(p) for p in inst.permutations]),
        },
    }
    if inst.kind == "derivation":
        doc["payload"] = _derivation_doc(inst.payload)
    elif inst.kind in ("automorphism", "star_iso"):
        doc["payload"] = _morphism_doc(inst.payload)
    elif inst.kind == "axioms":
        doc["payload"] = {"operators": [_operator_doc(op) for op in inst.payload]}
    return doc


def doc_to_instance(doc) -> Instance:
    """Validate a parsed document and rebuild the domain objects."""
    version = _need(doc, "version", "$")
    if version != FORMAT_VERSION:
        raise ValidationError(f"$.version: expected {FORMAT_VERSION!r}, got {version!r}")
    kind = _need(doc, "kind", "$")
    if kind not in KINDS:
        raise ValidationError(f"$.kind: unknown kind {kind!r}")
    space = _doc_atom_space(_need(doc, "atom_space", "$"), "$.atom_space")
    structure = _doc_structure(_need(doc, "structure", "$"), space, "$.structure")
    meta = _need(doc, "metadata", "$")
    seed = _as_int(_need(meta, "seed", "$.metadata"), "$.metadata.seed")
    params = meta.get("params", {})
    if not isinstance(params, dict):
        raise ValidationError("$.metadata.params: expected an object")
    sum_space = structure.sum_space if isinstance(structure, BlockStructure) else structure
    gt_doc = meta.get("ground_truth")
    ground_truth = None
    if gt_doc is not None:
        ground_truth = _doc_operator(gt_doc, sum_space, sum_space,
                                     "$.metadata.ground_truth")
    perms_doc = meta.get("permutations")
    permutations = None
    if perms_doc is not None:
        if not isinstance(perms_doc, list) or len(perms_doc) != space.atom_count:
            raise ValidationError("$.metadata.permutations: one entry per atom")
        permutations = tuple(
            tuple(_as_int(v, f"$.metadata.permutations[{t}][{i}]")
                  for i, v in enumerate(row))
            for t, row in enumerate(perms_doc)
        )
    if kind in ("derivation", "automorphism", "axioms"):
        if not isinstance(structure, ModuleSpace):
            raise ValidationError(f"$.structure: kind {kind!r} needs a module structure")
    elif not isinstance(structure, BlockStructure):
        raise ValidationError("$.structure: kind 'star_iso' needs a block structure")
    payload_doc = _need(doc, "payload", "$")
    if kind == "derivation":
        payload = _doc_derivation(payload_doc, structure, "$.payload")
    elif kind in ("automorphism", "star_iso"):
        payload = _doc_morphism(payload_doc, structure, "$.payload")
    else:
        ops_doc = _need(payload_doc, "operators", "$.payload")
        if not isinstance(ops_doc, list) or not ops_doc:
            raise ValidationError("$.payload.operators: expected a nonempty array")
        payload = tuple(
            _doc_operator(op_doc, sum_space, sum_space, f"$.payload.operators[{k}]")
            for k, op_doc in enumerate(ops_doc)
        )
    return Instance(kind, structure, payload, seed, params,
                    ground_truth=ground_truth, permutations=permutations)


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(canonical_json(instance_to_doc(inst)), encoding="utf-8")


def load_instance(path) -> Instance:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return doc_to_instance(doc)
