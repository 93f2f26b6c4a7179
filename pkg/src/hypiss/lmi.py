"""Affine symmetric-matrix inequality systems over structured decision
variables.

A problem is a set of matrix expressions, affine in the scalar entries of
scalar / diagonal / full / symmetric variables, each constrained to be
negative semidefinite shifted by -eps*I or positive semidefinite shifted by
+eps*I.  The module knows how to evaluate expressions at a point, compute
signed feasibility margins, and flatten a whole problem into the dense
standard form consumed by the barrier solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg

SCALAR = "scalar"
DIAGONAL = "diagonal"
FULL = "full"
SYMMETRIC = "symmetric"
_KINDS = (SCALAR, DIAGONAL, FULL, SYMMETRIC)

LEQ = "leq"  # expr <= -eps*I
GEQ = "geq"  # expr >= +eps*I

DEFAULT_EPS = 1e-6

EntryRef = tuple[str, int]


class LmiError(Exception):
    pass


class IncompletePointError(LmiError):
    """A point is missing a value for a referenced variable entry."""


@dataclass(frozen=True)
class VarSpec:
    """Shape declaration for one decision variable.

    Entry order: scalar has the single entry 0; diagonal variables list the
    diagonal; full variables are row-major; symmetric variables list the
    upper triangle row-major, one entry per unordered index pair.
    """

    name: str
    kind: str
    rows: int
    cols: int

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise ValueError("variable name must be a nonempty string")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"variable {self.name}: dimensions must be positive")
        if self.kind in (SCALAR, DIAGONAL, SYMMETRIC) and self.rows != self.cols:
            raise ValueError(f"variable {self.name}: {self.kind} variables are square")
        if self.kind == SCALAR and self.rows != 1:
            raise ValueError(f"variable {self.name}: scalar variables are 1x1")

    @staticmethod
    def scalar(name: str) -> "VarSpec":
        return VarSpec(name, SCALAR, 1, 1)

    @staticmethod
    def diagonal(name: str, n: int) -> "VarSpec":
        return VarSpec(name, DIAGONAL, n, n)

    @staticmethod
    def full(name: str, rows: int, cols: int) -> "VarSpec":
        return VarSpec(name, FULL, rows, cols)

    @staticmethod
    def symmetric(name: str, n: int) -> "VarSpec":
        return VarSpec(name, SYMMETRIC, n, n)

    @property
    def n_entries(self) -> int:
        if self.kind == SCALAR:
            return 1
        if self.kind == DIAGONAL:
            return self.rows
        if self.kind == FULL:
            return self.rows * self.cols
        return self.rows * (self.rows + 1) // 2

    def entry_positions(self) -> list[tuple[int, int]]:
        """(row, col) owning each entry, in entry order."""
        if self.kind == SCALAR:
            return [(0, 0)]
        if self.kind == DIAGONAL:
            return [(i, i) for i in range(self.rows)]
        if self.kind == FULL:
            return [(i, j) for i in range(self.rows) for j in range(self.cols)]
        return [(i, j) for i in range(self.rows) for j in range(i, self.rows)]

    def matrix_from_entries(self, entries) -> np.ndarray:
        e = np.asarray(entries, dtype=float)
        if e.shape != (self.n_entries,):
            raise ValueError(
                f"variable {self.name}: expected {self.n_entries} entries, got {e.shape}")
        out = np.zeros((self.rows, self.cols))
        for k, (i, j) in enumerate(self.entry_positions()):
            out[i, j] = e[k]
            if self.kind == SYMMETRIC:
                out[j, i] = e[k]
        return out

    def entries_from_matrix(self, a) -> np.ndarray:
        m = np.asarray(a, dtype=float)
        if m.shape != (self.rows, self.cols):
            raise ValueError(
                f"variable {self.name}: expected a {self.rows}x{self.cols} matrix, "
                f"got shape {m.shape}")
        if self.kind == SYMMETRIC:
            m = (m + m.T) / 2.0
        return np.array([m[i, j] for (i, j) in self.entry_positions()])


def _exact_sym(a: np.ndarray) -> np.ndarray:
    # (A + A^T)/2 is bitwise symmetric in IEEE arithmetic
    return (a + a.T) / 2.0


class MatExpr:
    """Rectangular matrix expression, affine in variable entries.

    Stored as a constant plus one coefficient matrix per referenced entry.
    Supports +, -, scalar *, and @ against plain arrays on either side,
    which is all the constraint builders need.
    """

    __array_ufunc__ = None  # keep numpy from consuming our operators

    __slots__ = ("shape", "const", "coeffs")

    def __init__(self, shape: tuple[int, int], const: np.ndarray,
                 coeffs: dict[EntryRef, np.ndarray]):
        self.shape = shape
        self.const = const
        self.coeffs = coeffs

    @staticmethod
    def constant(a) -> "MatExpr":
        arr = np.atleast_2d(np.asarray(a, dtype=float))
        return MatExpr(arr.shape, arr.copy(), {})

    @staticmethod
    def zeros(rows: int, cols: int) -> "MatExpr":
        return MatExpr((rows, cols), np.zeros((rows, cols)), {})

    @staticmethod
    def from_var(spec: VarSpec) -> "MatExpr":
        coeffs: dict[EntryRef, np.ndarray] = {}
        for k, (i, j) in enumerate(spec.entry_positions()):
            c = np.zeros((spec.rows, spec.cols))
            c[i, j] = 1.0
            if spec.kind == SYMMETRIC:
                c[j, i] = 1.0
            coeffs[(spec.name, k)] = c
        return MatExpr((spec.rows, spec.cols), np.zeros((spec.rows, spec.cols)), coeffs)

    @staticmethod
    def scalar_identity(name: str, n: int) -> "MatExpr":
        """x * I_n for a scalar variable x."""
        return MatExpr((n, n), np.zeros((n, n)), {(name, 0): np.eye(n)})

    def _map(self, f) -> "MatExpr":
        const = f(self.const)
        return MatExpr(const.shape, const, {r: f(c) for r, c in self.coeffs.items()})

    @property
    def T(self) -> "MatExpr":
        return self._map(lambda m: m.T.copy())

    def __neg__(self) -> "MatExpr":
        return self._map(lambda m: -m)

    def __add__(self, other) -> "MatExpr":
        other = other if isinstance(other, MatExpr) else MatExpr.constant(other)
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch in +: {self.shape} vs {other.shape}")
        coeffs = {r: c.copy() for r, c in self.coeffs.items()}
        for r, c in other.coeffs.items():
            coeffs[r] = coeffs[r] + c if r in coeffs else c.copy()
        return MatExpr(self.shape, self.const + other.const, coeffs)

    def __radd__(self, other) -> "MatExpr":
        return self.__add__(other)

    def __sub__(self, other) -> "MatExpr":
        other = other if isinstance(other, MatExpr) else MatExpr.constant(other)
        return self.__add__(-other)

    def __rsub__(self, other) -> "MatExpr":
        return (-self).__add__(other)

    def __mul__(self, scalar) -> "MatExpr":
        s = float(scalar)
        return self._map(lambda m: s * m)

    __rmul__ = __mul__

    def __matmul__(self, other) -> "MatExpr":
        if isinstance(other, MatExpr):
            raise TypeError("products of two variable expressions are not affine")
        c = np.atleast_2d(np.asarray(other, dtype=float))
        if self.shape[1] != c.shape[0]:
            raise ValueError(f"shape mismatch in @: {self.shape} vs {c.shape}")
        return self._map(lambda m: m @ c)

    def __rmatmul__(self, other) -> "MatExpr":
        c = np.atleast_2d(np.asarray(other, dtype=float))
        if c.shape[1] != self.shape[0]:
            raise ValueError(f"shape mismatch in @: {c.shape} vs {self.shape}")
        return self._map(lambda m: c @ m)

    def value(self, point: "Point") -> np.ndarray:
        out = self.const.copy()
        for ref, coeff in self.coeffs.items():
            out += point.entry(ref) * coeff
        return out


@dataclass(frozen=True)
class AffineMatrixExpr:
    """Square symmetric-valued affine expression in canonical form.

    The constant and every coefficient matrix are bitwise symmetric; terms
    are sorted by (variable name, entry index) so identical expressions
    compare and serialize identically.
    """

    dim: int
    constant: np.ndarray
    terms: tuple[tuple[EntryRef, np.ndarray], ...]

    @staticmethod
    def from_expr(e: MatExpr) -> "AffineMatrixExpr":
        if e.shape[0] != e.shape[1]:
            raise ValueError(f"constraint expression must be square, got {e.shape}")
        const = _exact_sym(e.const)
        terms = []
        for ref in sorted(e.coeffs):
            coeff = _exact_sym(e.coeffs[ref])
            if np.any(coeff != 0.0):
                terms.append((ref, coeff))
        return AffineMatrixExpr(e.shape[0], const, tuple(terms))

    def refs(self) -> list[EntryRef]:
        return [r for r, _ in self.terms]


def symmetric_expr(e) -> AffineMatrixExpr:
    """Canonicalize a square MatExpr (or array) as a symmetric expression."""
    if isinstance(e, AffineMatrixExpr):
        return e
    if not isinstance(e, MatExpr):
        e = MatExpr.constant(e)
    return AffineMatrixExpr.from_expr(e)


def sym_block(rows: list[list]) -> AffineMatrixExpr:
    """Assemble a symmetric block matrix from its upper triangle.

    ``rows[i][j]`` for j >= i gives the (i, j) block as a MatExpr, array, or
    scalar-diagonal shorthand is not supported: pass explicit blocks.  Lower
    triangle entries must be None and are filled with the transposed mirror
    blocks.
    """
    nb = len(rows)
    if any(len(r) != nb for r in rows):
        raise ValueError("block description must be a square list of lists")

    def as_expr(b):
        return b if isinstance(b, MatExpr) else MatExpr.constant(b)

    for i in range(nb):
        for j in range(i):
            if rows[i][j] is not None:
                raise ValueError("blocks below the diagonal must be None (mirrored)")
        if rows[i][i] is None:
            raise ValueError("diagonal blocks are required")

    sizes = []
    for i in range(nb):
        d = as_expr(rows[i][i])
        if d.shape[0] != d.shape[1]:
            raise ValueError(f"diagonal block {i} must be square, got {d.shape}")
        sizes.append(d.shape[0])
    offs = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    total = int(offs[-1])

    def embed(expr: MatExpr, i: int, j: int) -> MatExpr:
        r0, c0 = offs[i], offs[j]

        def place(m):
            out = np.zeros((total, total))
            out[r0:r0 + m.shape[0], c0:c0 + m.shape[1]] = m
            return out

        return expr._map(place)

    acc = MatExpr.zeros(total, total)
    for i in range(nb):
        for j in range(i, nb):
            if rows[i][j] is None:
                continue
            b = as_expr(rows[i][j])
            if b.shape != (sizes[i], sizes[j]):
                raise ValueError(
                    f"block ({i},{j}) has shape {b.shape}, expected {(sizes[i], sizes[j])}")
            acc = acc + embed(b, i, j)
            if i != j:
                acc = acc + embed(b.T, j, i)
    return AffineMatrixExpr.from_expr(acc)


@dataclass(frozen=True)
class Constraint:
    """One semidefinite constraint: expr <= -eps*I or expr >= +eps*I.

    ``eps=None`` defers to the problem-wide slack; an explicit value (0.0
    included) overrides it for this constraint alone.
    """

    expr: AffineMatrixExpr
    sense: str
    label: str = ""
    eps: float | None = None

    def __post_init__(self):
        if self.sense not in (LEQ, GEQ):
            raise ValueError(f"unknown constraint sense {self.sense!r}")
        if self.eps is not None and self.eps < 0.0:
            raise ValueError("constraint eps must be nonnegative")


@dataclass(frozen=True)
class LmiProblem:
    variables: tuple[VarSpec, ...]
    constraints: tuple[Constraint, ...]
    objective: tuple[tuple[EntryRef, float], ...] | None = None
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.eps < 0.0:
            raise ValueError("problem eps must be nonnegative")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        declared = {v.name: v.n_entries for v in self.variables}

        def check_ref(ref, where):
            name, idx = ref
            if name not in declared:
                raise ValueError(f"{where} references undeclared variable {name!r}")
            if not 0 <= idx < declared[name]:
                raise ValueError(f"{where} references entry {idx} of {name!r} "
                                 f"(has {declared[name]} entries)")

        for k, con in enumerate(self.constraints):
            where = con.label or f"constraint {k}"
            for ref in con.expr.refs():
                check_ref(ref, where)
        if self.objective is not None:
            obj = tuple(sorted(((r, float(w)) for r, w in dict(self.objective).items())))
            object.__setattr__(self, "objective", obj)
            for ref, _ in obj:
                check_ref(ref, "objective")

    def variable(self, name: str) -> VarSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def resolved_eps(self, con: Constraint) -> float:
        return self.eps if con.eps is None else con.eps

    @property
    def n_entries(self) -> int:
        return sum(v.n_entries for v in self.variables)


@dataclass(frozen=True)
class Point:
    """Values for every entry of some set of variables, keyed by name."""

    entries: dict[str, np.ndarray] = field(default_factory=dict)

    @staticmethod
    def build(variables, values: dict) -> "Point":
        """Build from per-variable matrices (or flat entry arrays)."""
        out: dict[str, np.ndarray] = {}
        for spec in variables:
            if spec.name not in values:
                raise IncompletePointError(f"no value given for variable {spec.name!r}")
            v = np.asarray(values[spec.name], dtype=float)
            if v.ndim <= 1 and spec.kind != FULL:
                flat = np.atleast_1d(v)
                if flat.shape != (spec.n_entries,):
                    raise ValueError(
                        f"variable {spec.name}: expected {spec.n_entries} entries, "
                        f"got shape {v.shape}")
            else:
                flat = spec.entries_from_matrix(v)
            if not np.all(np.isfinite(flat)):
                raise ValueError(f"variable {spec.name}: non-finite entries")
            arr = flat.copy()
            arr.setflags(write=False)
            out[spec.name] = arr
        return Point(out)

    def entry(self, ref: EntryRef) -> float:
        name, idx = ref
        try:
            return float(self.entries[name][idx])
        except (KeyError, IndexError):
            raise IncompletePointError(f"point has no value for entry {name}[{idx}]") from None

    def matrix(self, spec: VarSpec) -> np.ndarray:
        if spec.name not in self.entries:
            raise IncompletePointError(f"point has no value for variable {spec.name!r}")
        return spec.matrix_from_entries(self.entries[spec.name])


def evaluate(expr: AffineMatrixExpr, point: Point) -> linalg.SymMatrix:
    """Value of the expression at the point, symmetrized exactly."""
    m = expr.constant.copy()
    for ref, coeff in expr.terms:
        m += point.entry(ref) * coeff
    return linalg.SymMatrix.symmetrized(m)


def margin(expr: AffineMatrixExpr, sense: str, point: Point, eps: float = 0.0) -> float:
    """Signed slack of the constraint at the point; positive means strictly
    satisfied.

    For expr <= -eps*I the margin is -max_eig(value) - eps; for
    expr >= +eps*I it is min_eig(value) - eps.
    """
    value = evaluate(expr, point)
    if sense == LEQ:
        return -linalg.max_eig(value) - eps
    if sense == GEQ:
        return linalg.min_eig(value) - eps
    raise ValueError(f"unknown constraint sense {sense!r}")


def constraint_margin(problem: LmiProblem, con: Constraint, point: Point) -> float:
    return margin(con.expr, con.sense, point, eps=problem.resolved_eps(con))


def problem_margins(problem: LmiProblem, point: Point) -> list[float]:
    return [constraint_margin(problem, c, point) for c in problem.constraints]


@dataclass(frozen=True)
class StandardBlock:
    """One constraint flattened to dense stacked coefficients.

    ``base + sum_k x[idx[k]] * coeffs[k]`` reproduces the raw expression
    value; sense and the resolved eps say how to read it as a cone.
    """

    label: str
    sense: str
    eps: float
    dim: int
    base: np.ndarray
    idx: np.ndarray
    coeffs: np.ndarray

    def value(self, x: np.ndarray) -> np.ndarray:
        out = self.base.copy()
        if len(self.idx):
            out += np.tensordot(x[self.idx], self.coeffs, axes=1)
        return out


@dataclass(frozen=True)
class StandardForm:
    """Whole problem over one flat entry vector, in declaration order."""

    refs: tuple[EntryRef, ...]
    initial: np.ndarray
    objective: np.ndarray | None
    blocks: tuple[StandardBlock, ...]
    variables: tuple[VarSpec, ...]

    @property
    def n(self) -> int:
        return len(self.refs)

    def point(self, x: np.ndarray) -> Point:
        out: dict[str, np.ndarray] = {}
        pos = 0
        for spec in self.variables:
            arr = np.array(x[pos:pos + spec.n_entries])
            arr.setflags(write=False)
            out[spec.name] = arr
            pos += spec.n_entries
        return Point(out)

    def vector(self, point: Point) -> np.ndarray:
        return np.array([point.entry(r) for r in self.refs])


def vectorize(problem: LmiProblem) -> StandardForm:
    """Flatten to dense per-constraint coefficient stacks.

    The suggested initial vector is 1 on entries of diagonal variables and
    0 elsewhere, which keeps the usual positivity blocks away from zero at
    the solver's starting point.
    """
    refs: list[EntryRef] = []
    initial = []
    for spec in problem.variables:
        for k in range(spec.n_entries):
            refs.append((spec.name, k))
            initial.append(1.0 if spec.kind == DIAGONAL else 0.0)
    index = {r: i for i, r in enumerate(refs)}

    blocks = []
    for k, con in enumerate(problem.constraints):
        e = con.expr
        idx = np.array([index[r] for r in e.refs()], dtype=int)
        coeffs = (np.stack([c for _, c in e.terms])
                  if e.terms else np.zeros((0, e.dim, e.dim)))
        blocks.append(StandardBlock(
            label=con.label or f"constraint_{k}",
            sense=con.sense,
            eps=problem.resolved_eps(con),
            dim=e.dim,
            base=e.constant.copy(),
            idx=idx,
            coeffs=coeffs,
        ))

    obj = None
    if problem.objective is not None:
        obj = np.zeros(len(refs))
        for ref, w in problem.objective:
            obj[index[ref]] += w

    return StandardForm(
        refs=tuple(refs),
        initial=np.array(initial),
        objective=obj,
        blocks=tuple(blocks),
        variables=problem.variables,
    )
