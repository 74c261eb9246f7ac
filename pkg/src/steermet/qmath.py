"""Dense complex linear algebra for small multi-qubit density matrices.

All operators are plain ``numpy`` arrays in row-major order.  The tensor
convention used throughout the package is that of ``numpy.kron``: the first
factor of a product is the most significant index.  Registers are laid out
as control (x) system (x) environment-1 (x) environment-2, i.e. C is the
leftmost factor wherever a control qubit is present.

Numerical tolerances live here as module constants so they can be adjusted
in one place.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

# Validation tolerances for state and operator invariants.
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
UNITARITY_TOL = 1e-10
# Eigenvalue-pair support cutoff used by the logarithmic-derivative sums.
SUPPORT_CUTOFF = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def projector(vec: np.ndarray) -> np.ndarray:
    """Rank-one projector |v><v| of a normalised vector."""
    v = np.asarray(vec, dtype=complex)
    return np.outer(v, v.conj())


def is_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - dagger(m))) <= tol


def require_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL,
                      what: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, tol):
        raise ValueError(f"{what} is not Hermitian within {tol}")
    return m


def is_unitary(m: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    m = np.asarray(m)
    return np.max(np.abs(dagger(m) @ m - np.eye(m.shape[0]))) <= tol


def tensor(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, first factor leftmost."""
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return out


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one positive-semidefinite Hermitian matrix over qubit factors.

    Construction validates Hermiticity, unit trace and spectrum floor; the
    wrapped array should not be mutated afterwards.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        d = m.shape[0]
        if m.shape != (d, d) or d & (d - 1):
            raise ValueError(f"density matrix must be square with power-of-two "
                             f"dimension, got shape {m.shape}")
        if not is_hermitian(m):
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(m) - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {np.trace(m)} != 1")
        if np.linalg.eigvalsh(m)[0] < EIGENVALUE_FLOOR:
            raise ValueError("density matrix has a significantly negative "
                             "eigenvalue")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, vec: np.ndarray) -> "DensityMatrix":
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(projector(v))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def partial_trace(rho, factor_dims: Sequence[int], keep: Iterable[int]):
    """Reduced state over the kept tensor factors.

    ``factor_dims`` lists the dimension of each factor in register order and
    must multiply to the full dimension.  ``keep`` selects factor indices;
    the result is ordered by ascending original factor index.  Returns the
    same kind (``DensityMatrix`` in, ``DensityMatrix`` out).
    """
    wrap = isinstance(rho, DensityMatrix)
    m = rho.matrix if wrap else np.asarray(rho, dtype=complex)
    dims = list(factor_dims)
    n = len(dims)
    if prod(dims) != m.shape[0]:
        raise ValueError(f"factor dims {dims} do not match dimension "
                         f"{m.shape[0]}")
    kept = sorted(set(keep))
    if not kept or any(k < 0 or k >= n for k in kept):
        raise ValueError(f"keep={kept} is not a nonempty subset of factor "
                         f"indices 0..{n - 1}")
    t = m.reshape(dims + dims)
    # Row index i_k and column index j_k share a symbol on traced factors.
    row = list(range(n))
    col = [k if k not in kept else n + k for k in range(n)]
    out_idx = kept + [n + k for k in kept]
    reduced = np.einsum(t, row + col, out_idx)
    d_keep = prod(dims[k] for k in kept)
    reduced = reduced.reshape(d_keep, d_keep)
    return DensityMatrix(reduced) if wrap else reduced


def eig_hermitian(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending, real) and orthonormal eigenvector columns."""
    m = require_hermitian(m)
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(vals)[::-1]
    return vals[order].real, vecs[:, order]


def embed(op: np.ndarray, factor_dims: Sequence[int],
          targets: Sequence[int]) -> np.ndarray:
    """Operator acting as ``op`` on the listed factors and identity elsewhere.

    ``op`` is indexed in the order given by ``targets`` (which need not be
    adjacent or sorted); the result is indexed in natural register order.
    """
    dims = list(factor_dims)
    n = len(dims)
    targets = list(targets)
    rest = [i for i in range(n) if i not in targets]
    d_rest = prod(dims[i] for i in rest) if rest else 1
    big = np.kron(np.asarray(op, dtype=complex), np.eye(d_rest))
    perm = targets + rest
    t = big.reshape([dims[p] for p in perm] * 2)
    inv = np.argsort(perm)
    t = t.transpose(list(inv) + [n + i for i in inv])
    d = prod(dims)
    return t.reshape(d, d)


def trace_distance(a: np.ndarray | DensityMatrix,
                   b: np.ndarray | DensityMatrix) -> float:
    """Half the trace norm of the difference of two Hermitian matrices."""
    ma = a.matrix if isinstance(a, DensityMatrix) else np.asarray(a)
    mb = b.matrix if isinstance(b, DensityMatrix) else np.asarray(b)
    vals = np.linalg.eigvalsh(ma - mb)
    return 0.5 * float(np.sum(np.abs(vals)))
