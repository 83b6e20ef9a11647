# lmi/textio.py
"""
Formato de texto plano para problemas y certificados.

Cada matriz se escribe con una línea de cabecera ``<nombre> <filas> <columnas>``
seguida de sus filas, con las entradas separadas por espacios. Las demás
líneas son directivas (``variable``, ``constraint``, ``term``, ``margin``).
"""
import numpy as np

from .exceptions import DimensionMismatch
from .expressions import AffineMatrix
from .models import MATRIX, NEGATIVE, SCALAR, SYMMETRIC, LmiCertificate, LmiProblem

PROBLEM_HEADER = 'lmi-problem'
CERTIFICATE_HEADER = 'lmi-certificate'


def _fmt(value):
    return format(float(value), '.17g')


def write_matrix(lines, name, matrix):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    lines.append(f"{name} {matrix.shape[0]} {matrix.shape[1]}")
    lines.extend(' '.join(_fmt(v) for v in row) for row in matrix)


def read_matrix(lines, pos):
    name, rows, cols = lines[pos].split()
    rows, cols = int(rows), int(cols)
    values = [list(map(float, lines[pos + 1 + i].split())) for i in range(rows)]
    matrix = np.array(values, dtype=float).reshape(rows, cols)
    return name, matrix, pos + 1 + rows


def _content_lines(text):
    return [line.strip() for line in text.splitlines() if line.strip() and not line.lstrip().startswith('#')]


def dump_problem(problem):
    lines = [f"{PROBLEM_HEADER} {problem.name}"]
    owner = {}
    for variable in problem.variables:
        lines.append(f"variable {variable.name} {variable.kind} {variable.shape[0]} {variable.shape[1]}")
        for k in range(variable.size):
            owner[variable.offset + k] = (variable.name, k)
    for constraint in problem.constraints:
        expr = constraint.expr
        lines.append(f"constraint {constraint.sign} {len(expr.terms)} {constraint.label}")
        write_matrix(lines, 'const', expr.const)
        for idx in expr.variables:
            name, k = owner[idx]
            write_matrix(lines, f"term:{name}:{k}", expr.terms[idx])
    return '\n'.join(lines) + '\n'


def load_problem(text):
    lines = _content_lines(text)
    if not lines or not lines[0].startswith(PROBLEM_HEADER):
        raise ValueError("El texto no contiene un problema LMI.")
    problem = LmiProblem(lines[0][len(PROBLEM_HEADER):].strip() or 'lmi')
    pos = 1
    while pos < len(lines) and lines[pos].startswith('variable '):
        _, name, kind, rows, cols = lines[pos].split()
        rows, cols = int(rows), int(cols)
        if kind == SYMMETRIC:
            problem.add_symmetric(name, rows, positive=False)
        elif kind == SCALAR:
            problem.add_scalar(name, positive=False)
        elif kind == MATRIX:
            problem.add_matrix(name, rows, cols)
        else:
            raise ValueError(f"Tipo de variable desconocido: {kind}.")
        pos += 1
    while pos < len(lines):
        head = lines[pos].split(maxsplit=3)
        if head[0] != 'constraint' or len(head) < 4:
            raise ValueError(f"Línea inesperada: {lines[pos]!r}.")
        sign, count, label = head[1], int(head[2]), head[3]
        _, const, pos = read_matrix(lines, pos + 1)
        terms = {}
        for _ in range(count):
            tag, matrix, pos = read_matrix(lines, pos)
            _, name, k = tag.split(':')
            terms[problem.variable(name).offset + int(k)] = matrix
        add = problem.require_negative if sign == NEGATIVE else problem.require_positive
        add(AffineMatrix(const, terms), label)
    return problem


def dump_certificate(certificate):
    lines = [CERTIFICATE_HEADER]
    for name, value in certificate.assignment.items():
        write_matrix(lines, name, value)
    for label, extreme in certificate.margins.items():
        lines.append(f"margin {_fmt(extreme)} {label}")
    return '\n'.join(lines) + '\n'


def load_certificate(text, problem=None):
    lines = _content_lines(text)
    if not lines or lines[0] != CERTIFICATE_HEADER:
        raise ValueError("El texto no contiene un certificado LMI.")
    assignment, margins = {}, {}
    pos = 1
    while pos < len(lines):
        if lines[pos].startswith('margin '):
            _, value, label = lines[pos].split(maxsplit=2)
            margins[label] = float(value)
            pos += 1
            continue
        name, matrix, pos = read_matrix(lines, pos)
        assignment[name] = matrix
    if problem is not None:
        for variable in problem.variables:
            if variable.name not in assignment:
                raise DimensionMismatch(f"Falta la variable {variable.name} en el certificado.")
            if variable.kind == SCALAR:
                assignment[variable.name] = float(assignment[variable.name][0, 0])
    return LmiCertificate(assignment, margins)
