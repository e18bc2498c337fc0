"""JSON descriptors for algebras, modules, kernels, units and free units

Complex numbers are written as plain numbers or as [re, im] pairs.
Elements of B are lists of blocks (each a list of rows). Module vectors are
lists of free_rank elements. Superoperators are D x D matrices or
{"diagonal": [...]} in the matrix-unit basis. Every parse failure is raised
as a DescriptorError naming the file, the line of the offending key when it
can be located, and the field path.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .algebra import Algebra, AlgebraElement, SuperOperator
from .bimodule import AdjointableMap, Bimodule, ModuleVector, TensorWord
from .errors import DescriptorError, LabError
from .free_flow import FreeUnitParam, IndicatorTerm
from .kernels import CPDKernel, kernel_from_vectors
from .tof import MorphismMatrix, TofSystem, UnitParams

logger = logging.getLogger(__name__)

REPORT_HEADER = ("theorem", "assertion", "residual", "tolerance", "pass")


class _Source:
    """A parsed file with the text kept around for locating keys"""

    def __init__(self, path: Path, text: str):
        self.path = path
        self.text = text

    def line_of(self, field: str) -> int | None:
        key = field.rsplit(".", 1)[-1].split("[", 1)[0]
        if not key:
            return None
        match = re.search(rf'"{re.escape(key)}"\s*:', self.text)
        return self.text.count("\n", 0, match.start()) + 1 if match else None

    def error(self, message: str, field: str) -> DescriptorError:
        return DescriptorError(message, str(self.path), self.line_of(field), field)


def _read(path: str | Path) -> tuple[Any, _Source]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise DescriptorError(f"cannot read descriptor: {e}", str(path)) from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DescriptorError(e.msg, str(path), line=e.lineno) from e
    return data, _Source(path, text)


def _guard(source: _Source, field: str, build: Callable[[], Any]) -> Any:
    try:
        return build()
    except DescriptorError:
        raise
    except (LabError, KeyError, TypeError, ValueError, IndexError) as e:
        message = f"missing field {e}" if isinstance(e, KeyError) else str(e)
        raise source.error(message, field) from e


def _complex(value: Any) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex numbers are [re, im] pairs, got {value}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(f"expected a number, got {value!r}")
    return complex(value)


def _matrix(rows: Any) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise TypeError("a matrix is a nonempty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("matrix rows have different lengths")
    return np.array([[_complex(x) for x in r] for r in rows], dtype=complex)


def _encode_complex(z: complex) -> float | list[float]:
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _encode_matrix(matrix: np.ndarray) -> list[list[Any]]:
    return [[_encode_complex(x) for x in row] for row in matrix]


def parse_algebra(data: Any) -> Algebra:
    sizes = data["blocks"] if isinstance(data, Mapping) else data
    if not isinstance(sizes, list):
        raise TypeError("algebra blocks must be a list of sizes")
    return Algebra(tuple(int(d) for d in sizes))


def parse_element(algebra: Algebra, data: Any) -> AlgebraElement:
    if not isinstance(data, list) or len(data) != len(algebra.block_sizes):
        raise ValueError(f"expected {len(algebra.block_sizes)} blocks")
    return algebra.element([_matrix(block) for block in data])


def dump_element(b: AlgebraElement) -> list:
    return [_encode_matrix(block) for block in b.blocks()]


def parse_superoperator(algebra: Algebra, data: Any) -> SuperOperator:
    if isinstance(data, Mapping):
        diagonal = [_complex(x) for x in data["diagonal"]]
        if len(diagonal) != algebra.D:
            raise ValueError(f"diagonal needs {algebra.D} entries")
        return SuperOperator(algebra, np.diag(diagonal))
    return SuperOperator(algebra, _matrix(data))


def parse_bimodule(algebra: Algebra, data: Any) -> Bimodule:
    kind = data.get("kind", "action")
    if kind == "regular":
        return Bimodule.regular(algebra)
    if kind == "free":
        return Bimodule.free(algebra, int(data["free_rank"]))
    if kind == "zero":
        return Bimodule.zero(algebra)
    if kind != "action":
        raise ValueError(f"unknown module kind {kind!r}")
    k = int(data["free_rank"])
    action = np.stack([_matrix(m) for m in data["action"]])
    module = Bimodule(algebra, k, action)
    if not module.is_valid():
        raise ValueError(f"left action is not a *-homomorphism (residual {module.homomorphism_residual():.3e})")
    return module


def parse_vector(module: Bimodule, data: Any) -> ModuleVector:
    if not isinstance(data, list):
        raise TypeError("a module vector is a list of elements")
    return module.from_components([parse_element(module.algebra, c) for c in data])


def dump_vector(x: ModuleVector) -> list:
    return [dump_element(c) for c in x.components()]


def load_algebra(path: str | Path) -> Algebra:
    data, source = _read(path)
    return _guard(source, "blocks", lambda: parse_algebra(data))


def load_bimodule(path: str | Path) -> Bimodule:
    data, source = _read(path)
    algebra = _guard(source, "algebra", lambda: parse_algebra(data["algebra"]))
    return _guard(source, "module", lambda: parse_bimodule(algebra, data["module"]))


def load_kernel(path: str | Path) -> CPDKernel:
    """{"algebra": [..], "labels": [..], "entries": {"s|t": superoperator}}

    Alternatively {"module": .., "vectors": {label: vector}} describes a
    kernel in Kolmogorov form.
    """
    data, source = _read(path)
    algebra = _guard(source, "algebra", lambda: parse_algebra(data["algebra"]))
    if "vectors" in data:
        module = _guard(source, "module", lambda: parse_bimodule(algebra, data["module"]))
        vectors = {}
        for label, raw in _guard(source, "vectors", lambda: dict(data["vectors"])).items():
            vectors[label] = _guard(source, f"vectors.{label}", lambda raw=raw: parse_vector(module, raw))
        return _guard(source, "vectors", lambda: kernel_from_vectors(list(vectors), list(vectors.values())))

    labels = _guard(source, "labels", lambda: [str(s) for s in data["labels"]])
    raw_entries = _guard(source, "entries", lambda: dict(data["entries"]))
    entries = {}
    for key, raw in raw_entries.items():
        field = f"entries.{key}"
        pair = _guard(source, field, lambda key=key: tuple(key.split("|")))
        if len(pair) != 2:
            raise source.error(f"entry key {key!r} must read 'label|label'", field)
        entries[pair] = _guard(source, field, lambda raw=raw: parse_superoperator(algebra, raw))
    return _guard(source, "entries", lambda: CPDKernel(algebra, tuple(labels), entries))


def load_units(path: str | Path) -> tuple[TofSystem, dict[str, UnitParams], dict[str, complex]]:
    """{"algebra", "module", "units": {label: {"beta", "zeta", "weight"?}}}"""
    data, source = _read(path)
    algebra = _guard(source, "algebra", lambda: parse_algebra(data["algebra"]))
    module = _guard(source, "module", lambda: parse_bimodule(algebra, data["module"]))
    system = TofSystem(module)
    units, weights = {}, {}
    for label, raw in _guard(source, "units", lambda: dict(data["units"])).items():
        beta = _guard(source, f"units.{label}.beta", lambda raw=raw: parse_element(algebra, raw["beta"]) if "beta" in raw else algebra.zero())
        zeta = _guard(source, f"units.{label}.zeta", lambda raw=raw: parse_vector(module, raw["zeta"]) if "zeta" in raw else module.zero_vector())
        units[label] = UnitParams(system, beta, zeta)
        if "weight" in raw:
            weights[label] = _guard(source, f"units.{label}.weight", lambda raw=raw: _complex(raw["weight"]))
    return system, units, weights


def dump_units(units: Mapping[str, UnitParams], path: str | Path) -> None:
    first = next(iter(units.values()))
    module = first.system.index
    document = {
        "algebra": list(first.system.algebra.block_sizes),
        "module": {
            "kind": "action",
            "free_rank": module.free_rank,
            "action": [_encode_matrix(m) for m in module.action],
        },
        "units": {label: {"beta": dump_element(p.beta), "zeta": dump_vector(p.zeta)} for label, p in units.items()},
    }
    Path(path).write_text(json.dumps(document, indent=2))


def load_morphism(path: str | Path, source_system: TofSystem, target_system: TofSystem) -> MorphismMatrix:
    """{"gamma", "eta", "eta_prime", "a": kN' x kN matrix}; omitted parts are zero"""
    data, source = _read(path)
    B = source_system.algebra
    F, G = source_system.index, target_system.index
    gamma = _guard(source, "gamma", lambda: parse_element(B, data["gamma"]) if "gamma" in data else B.zero())
    eta = _guard(source, "eta", lambda: parse_vector(F, data["eta"]) if "eta" in data else F.zero_vector())
    eta_prime = _guard(source, "eta_prime", lambda: parse_vector(G, data["eta_prime"]) if "eta_prime" in data else G.zero_vector())
    a = _guard(source, "a", lambda: AdjointableMap(F, G, _matrix(data["a"])))
    return _guard(source, "a", lambda: MorphismMatrix(source_system, target_system, gamma, eta, eta_prime, a))


def parse_free_unit(module: Bimodule, data: Any) -> FreeUnitParam:
    truncation = int(data["truncation"])
    sectors = {}
    for key, terms in dict(data.get("sectors", {})).items():
        n = int(key)
        parsed = []
        for term in terms:
            letters = [parse_vector(module, x) for x in term["letters"]]
            word = TensorWord.elementary(*letters, module=module) * _complex(term.get("coefficient", 1.0))
            parsed.append(IndicatorTerm(tuple(tuple(iv) for iv in term.get("intervals", [])), word))
        sectors[n] = tuple(parsed)
    return FreeUnitParam(module, truncation, sectors)


def load_free_units(path: str | Path) -> tuple[Bimodule, dict[str, FreeUnitParam]]:
    """{"algebra", "module", "free_units": {label: {"truncation", "sectors": {n: [term]}}}}

    A term is {"intervals": [[lo, hi], ...], "letters": [vector, ...],
    "coefficient": c}; sector n terms carry n - 1 intervals and n letters.
    """
    data, source = _read(path)
    algebra = _guard(source, "algebra", lambda: parse_algebra(data["algebra"]))
    module = _guard(source, "module", lambda: parse_bimodule(algebra, data["module"]))
    units = {}
    for label, raw in _guard(source, "free_units", lambda: dict(data["free_units"])).items():
        units[label] = _guard(source, f"free_units.{label}", lambda raw=raw: parse_free_unit(module, raw))
    return module, units


def write_report(rows: Iterable[Sequence[Any]], path: str | Path) -> Path:
    """CSV with header theorem,assertion,residual,tolerance,pass"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for row in rows:
            writer.writerow(row)
    logger.info(f"report written to {path}")
    return path


def read_report(path: str | Path) -> list[dict[str, str]]:
    path = Path(path)
    try:
        with path.open(newline="") as f:
            reader = csv.DictReader(f)
            if tuple(reader.fieldnames or ()) != REPORT_HEADER:
                raise DescriptorError(f"unexpected header {reader.fieldnames}", str(path), line=1)
            return list(reader)
    except OSError as e:
        raise DescriptorError(f"cannot read report: {e}", str(path)) from e
