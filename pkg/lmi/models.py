# lmi/models.py
"""
Problemas de factibilidad LMI, sus certificados y los resultados de búsqueda.

Como en el resto del proyecto, son estructuras en memoria: nada se persiste.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .exceptions import DimensionMismatch
from .expressions import AffineMatrix

NEGATIVE = 'negative'
POSITIVE = 'positive'

SYMMETRIC = 'symmetric'
SCALAR = 'scalar'
MATRIX = 'matrix'


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    shape: Tuple[int, int]
    offset: int
    size: int

    def unpack(self, x):
        chunk = np.asarray(x[self.offset:self.offset + self.size], dtype=float)
        rows, cols = self.shape
        if self.kind == SYMMETRIC:
            value = np.zeros((rows, rows))
            value[np.triu_indices(rows)] = chunk
            return value + np.triu(value, 1).T
        if self.kind == SCALAR:
            return float(chunk[0])
        return chunk.reshape(rows, cols)

    def pack(self, value):
        rows, cols = self.shape
        if self.kind == SCALAR:
            return np.array([float(value)])
        value = np.atleast_2d(np.asarray(value, dtype=float))
        if value.shape != self.shape:
            raise DimensionMismatch(f"La variable {self.name} espera forma {self.shape}, se recibió {value.shape}.")
        if self.kind == SYMMETRIC:
            return value[np.triu_indices(rows)]
        return value.ravel()


@dataclass
class Constraint:
    label: str
    sign: str
    expr: AffineMatrix

    @property
    def order(self):
        return self.expr.shape[0]


class LmiProblem:
    """
    Colección de variables de decisión y de restricciones matriciales afines,
    cada una exigida definida negativa (o positiva).
    """

    def __init__(self, name='lmi'):
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self._by_name: Dict[str, Variable] = {}
        self.size = 0

    def _register(self, name, kind, shape, size):
        if name in self._by_name:
            raise ValueError(f"La variable {name} ya existe en el problema {self.name}.")
        variable = Variable(name, kind, shape, self.size, size)
        self.variables.append(variable)
        self._by_name[name] = variable
        self.size += size
        return variable

    def variable(self, name):
        return self._by_name[name]

    def add_symmetric(self, name, order, positive=True):
        variable = self._register(name, SYMMETRIC, (order, order), order * (order + 1) // 2)
        terms = {}
        idx = variable.offset
        for a in range(order):
            for b in range(a, order):
                basis = np.zeros((order, order))
                basis[a, b] = basis[b, a] = 1.0
                terms[idx] = basis
                idx += 1
        expr = AffineMatrix(np.zeros((order, order)), terms)
        if positive:
            self.require_positive(expr, f"{name} > 0")
        return expr

    def add_scalar(self, name, positive=True):
        variable = self._register(name, SCALAR, (1, 1), 1)
        expr = AffineMatrix(np.zeros((1, 1)), {variable.offset: np.ones((1, 1))})
        if positive:
            self.require_positive(expr, f"{name} > 0")
        return expr

    def add_matrix(self, name, rows, cols):
        variable = self._register(name, MATRIX, (rows, cols), rows * cols)
        terms = {}
        for k in range(rows * cols):
            basis = np.zeros((rows, cols))
            basis.flat[k] = 1.0
            terms[variable.offset + k] = basis
        return AffineMatrix(np.zeros((rows, cols)), terms)

    def _add_constraint(self, expr, label, sign):
        expr = AffineMatrix.lift(expr)
        rows, cols = expr.shape
        if rows != cols:
            raise DimensionMismatch(f"La restricción {label} no es cuadrada: {expr.shape}.")
        if expr.asymmetry() > 1e-9 * max(expr.scale(), 1.0):
            raise DimensionMismatch(f"La restricción {label} no es simétrica.")
        constraint = Constraint(label, sign, expr)
        self.constraints.append(constraint)
        return constraint

    def require_negative(self, expr, label):
        return self._add_constraint(expr, label, NEGATIVE)

    def require_positive(self, expr, label):
        return self._add_constraint(expr, label, POSITIVE)

    def pack(self, assignment):
        x = np.zeros(self.size)
        for variable in self.variables:
            if variable.name not in assignment:
                raise ValueError(f"Falta el valor de la variable {variable.name}.")
            x[variable.offset:variable.offset + variable.size] = variable.pack(assignment[variable.name])
        return x

    def unpack(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise DimensionMismatch(f"Se esperaban {self.size} componentes, se recibieron {x.shape}.")
        return {variable.name: variable.unpack(x) for variable in self.variables}

    def __repr__(self):
        return (f"LmiProblem({self.name!r}, variables={len(self.variables)}, "
                f"escalares={self.size}, restricciones={len(self.constraints)})")


@dataclass
class Margin:
    label: str
    sign: str
    extreme: float
    satisfied: bool


@dataclass
class MarginReport:
    """Autovalor extremo de cada restricción tras sustituir la asignación."""
    margins: List[Margin]
    tol_margin: float

    @property
    def satisfied(self):
        return all(m.satisfied for m in self.margins)

    def violations(self):
        return [m for m in self.margins if not m.satisfied]

    def as_dict(self):
        return {m.label: m.extreme for m in self.margins}


@dataclass
class LmiCertificate:
    assignment: Dict[str, object]
    margins: Dict[str, float]
    phase_one_margin: float = float('nan')
    iterations: int = 0

    feasible = True


@dataclass
class Infeasible:
    """Veredicto de infactibilidad: el margen óptimo de fase I es ≥ ``lower_bound`` ≥ 0."""
    lower_bound: float
    iterations: int = 0
    reason: str = ''

    feasible = False


@dataclass
class SearchResult:
    """
    Resultado de una bisección. Con ``unbounded`` el valor siguió factible
    tras todas las duplicaciones: ``max_feasible`` es solo una cota inferior
    y el intervalo queda abierto por arriba.
    """
    parameter: str
    max_feasible: Optional[float]
    bracket: Tuple[float, float]
    certificate: Optional[LmiCertificate] = None
    gamma_used: Optional[float] = None
    probes: List[Tuple[float, bool]] = field(default_factory=list)
    unbounded: bool = False

    @property
    def width(self):
        return self.bracket[1] - self.bracket[0]
