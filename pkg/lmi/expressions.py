# lmi/expressions.py
"""
Álgebra de matrices afines en las variables de decisión.

Una ``AffineMatrix`` representa F(x) = F_0 + Σ_i x_i F_i, donde x_i son las
componentes escalares de las variables registradas en un ``LmiProblem``.
Los constructores de LMIs escriben las matrices por bloques con los mismos
operadores que usarían con numpy.
"""
import numbers

import numpy as np

from .exceptions import DimensionMismatch


class AffineMatrix:
    # numpy cede los operadores binarios a los métodos reflejados
    __array_ufunc__ = None

    def __init__(self, const, terms=None):
        const = np.atleast_2d(np.asarray(const, dtype=float))
        self.const = const
        self.terms = {}
        for idx, mat in (terms or {}).items():
            mat = np.atleast_2d(np.asarray(mat, dtype=float))
            if mat.shape != const.shape:
                raise DimensionMismatch(
                    f"Término de la variable {idx} con forma {mat.shape}, se esperaba {const.shape}."
                )
            self.terms[idx] = mat

    @classmethod
    def zeros(cls, rows, cols=None):
        return cls(np.zeros((rows, rows if cols is None else cols)))

    @classmethod
    def lift(cls, value):
        if isinstance(value, AffineMatrix):
            return value
        return cls(value)

    @property
    def shape(self):
        return self.const.shape

    @property
    def variables(self):
        return sorted(self.terms)

    def is_constant(self):
        return not self.terms

    # -- aritmética -------------------------------------------------------

    def _combine(self, other, sign):
        other = AffineMatrix.lift(other)
        if other.shape != self.shape:
            raise DimensionMismatch(f"Formas incompatibles {self.shape} y {other.shape}.")
        terms = dict(self.terms)
        for idx, mat in other.terms.items():
            terms[idx] = terms[idx] + sign * mat if idx in terms else sign * mat
        return AffineMatrix(self.const + sign * other.const, terms)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __radd__(self, other):
        return AffineMatrix.lift(other)._combine(self, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return AffineMatrix.lift(other)._combine(self, -1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        if not isinstance(scalar, numbers.Real):
            return NotImplemented
        return AffineMatrix(scalar * self.const, {i: scalar * m for i, m in self.terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, AffineMatrix):
            if not (self.is_constant() or other.is_constant()):
                raise DimensionMismatch("El producto de dos expresiones no constantes no es afín.")
            if self.is_constant():
                return other.__rmatmul__(self.const)
            other = other.const
        other = np.atleast_2d(np.asarray(other, dtype=float))
        if self.shape[1] != other.shape[0]:
            raise DimensionMismatch(f"Producto {self.shape} @ {other.shape} no definido.")
        return AffineMatrix(self.const @ other, {i: m @ other for i, m in self.terms.items()})

    def __rmatmul__(self, other):
        other = np.atleast_2d(np.asarray(other, dtype=float))
        if other.shape[1] != self.shape[0]:
            raise DimensionMismatch(f"Producto {other.shape} @ {self.shape} no definido.")
        return AffineMatrix(other @ self.const, {i: other @ m for i, m in self.terms.items()})

    @property
    def T(self):
        return AffineMatrix(self.const.T, {i: m.T for i, m in self.terms.items()})

    def sym(self):
        """He(F) = F + Fᵀ."""
        return self + self.T

    def times(self, matrix):
        """Producto de una expresión escalar 1×1 por una matriz constante."""
        if self.shape != (1, 1):
            raise DimensionMismatch(f"times() requiere una expresión 1×1, se recibió {self.shape}.")
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return AffineMatrix(self.const[0, 0] * matrix, {i: m[0, 0] * matrix for i, m in self.terms.items()})

    def asymmetry(self):
        worst = float(np.max(np.abs(self.const - self.const.T), initial=0.0))
        for mat in self.terms.values():
            worst = max(worst, float(np.max(np.abs(mat - mat.T), initial=0.0)))
        return worst

    def scale(self):
        """Mayor entrada en valor absoluto entre la parte constante y los coeficientes."""
        values = [np.max(np.abs(self.const), initial=0.0)]
        values.extend(np.max(np.abs(m), initial=0.0) for m in self.terms.values())
        return float(max(values))

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        value = self.const.copy()
        for idx, mat in self.terms.items():
            value += x[idx] * mat
        return value

    def __repr__(self):
        return f"AffineMatrix(shape={self.shape}, variables={len(self.terms)})"


def bmat(blocks):
    """
    Ensambla una matriz por bloques. ``None`` denota un bloque nulo cuya forma
    se infiere de su fila y su columna.
    """
    rows = len(blocks)
    cols = len(blocks[0])
    if any(len(row) != cols for row in blocks):
        raise DimensionMismatch("Todas las filas de bloques deben tener el mismo largo.")

    heights = [None] * rows
    widths = [None] * cols
    for i, row in enumerate(blocks):
        for j, block in enumerate(row):
            if block is None:
                continue
            shape = AffineMatrix.lift(block).shape
            if heights[i] not in (None, shape[0]) or widths[j] not in (None, shape[1]):
                raise DimensionMismatch(f"El bloque ({i}, {j}) con forma {shape} no encaja.")
            heights[i], widths[j] = shape
    if None in heights or None in widths:
        raise DimensionMismatch("No se pudo inferir la forma de una fila o columna de bloques.")

    row_starts = np.concatenate([[0], np.cumsum(heights)])
    col_starts = np.concatenate([[0], np.cumsum(widths)])
    const = np.zeros((row_starts[-1], col_starts[-1]))
    terms = {}
    for i, row in enumerate(blocks):
        for j, block in enumerate(row):
            if block is None:
                continue
            block = AffineMatrix.lift(block)
            rs = slice(row_starts[i], row_starts[i + 1])
            cs = slice(col_starts[j], col_starts[j + 1])
            const[rs, cs] = block.const
            for idx, mat in block.terms.items():
                if idx not in terms:
                    terms[idx] = np.zeros_like(const)
                terms[idx][rs, cs] = mat
    return AffineMatrix(const, terms)
