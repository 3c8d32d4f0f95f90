"""Dense tensor-product operator algebra on interval subspaces of a chain.

Sites are numbered from 1 and the product basis is lexicographic with the
leftmost site as the most significant digit, so an operator on sites
``{q, ..., q+k}`` is a ``d**(k+1)`` square matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import (
    MatrixOverflowError,
    PreconditionError,
    SeriesDivergenceError,
    SingularRestrictionError,
    SupportError,
)

RCOND_THRESHOLD = 1e-10


@dataclass(frozen=True, order=True)
class IntervalSupport:
    """Connected set of sites ``{left, ..., left + edges}``."""

    left: int
    edges: int

    def __post_init__(self):
        if self.left < 1 or self.edges < 0:
            raise PreconditionError(f"invalid interval (left={self.left}, edges={self.edges})")

    @property
    def right(self) -> int:
        return self.left + self.edges

    @property
    def n_sites(self) -> int:
        return self.edges + 1

    def dim(self, d: int) -> int:
        return d ** (self.edges + 1)

    def contains(self, other: "IntervalSupport") -> bool:
        """Non-strict inclusion ``other ⊆ self``."""
        return self.left <= other.left and other.right <= self.right

    def strictly_contains(self, other: "IntervalSupport") -> bool:
        return self.contains(other) and self != other

    def intersects(self, other: "IntervalSupport") -> bool:
        return not (other.right < self.left or self.right < other.left)

    def fits(self, n_sites: int) -> bool:
        return self.right <= n_sites

    def shifted(self, offset: int) -> "IntervalSupport":
        return IntervalSupport(self.left + offset, self.edges)

    def __str__(self):
        return f"I[{self.left}..{self.right}]"


def _readonly(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex, copy=True)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class LocalOperator:
    """Dense matrix acting on the tensor factor of ``support``."""

    support: IntervalSupport
    matrix: np.ndarray

    def __post_init__(self):
        m = _readonly(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise PreconditionError("operator matrix must be square")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def local_dim(self) -> int:
        return _local_dim(self.dim, self.support.n_sites)


def _local_dim(dim: int, n_sites: int) -> int:
    d = int(round(dim ** (1.0 / n_sites)))
    for cand in (d - 1, d, d + 1):
        if cand >= 1 and cand**n_sites == dim:
            return cand
    raise PreconditionError(f"dimension {dim} is not a {n_sites}-th power")


@dataclass(frozen=True)
class VacuumProjectors:
    """Rank-one vacuum projector of an interval and its complement."""

    p_minus: np.ndarray
    p_plus: np.ndarray
    vacuum: np.ndarray = field(repr=False)


# --------------------------------------------------------------------------
# sub-factor actions


def act_left(op: np.ndarray, offset: int, op_sites: int, x: np.ndarray,
             total_sites: int, d: int) -> np.ndarray:
    """Return ``(1 ⊗ op ⊗ 1) @ x`` where ``op`` acts on sites ``offset .. offset+op_sites-1``
    (0-based) of a ``total_sites`` block."""
    dl = d**offset
    di = d**op_sites
    dr = d ** (total_sites - offset - op_sites)
    cols = x.shape[1]
    xr = x.reshape(dl, di, dr * cols)
    out = np.einsum("ij,ajb->aib", op, xr, optimize=True)
    return out.reshape(dl * di * dr, cols)


def act_right(op: np.ndarray, offset: int, op_sites: int, x: np.ndarray,
              total_sites: int, d: int) -> np.ndarray:
    """Return ``x @ (1 ⊗ op ⊗ 1)``."""
    dl = d**offset
    di = d**op_sites
    dr = d ** (total_sites - offset - op_sites)
    rows = x.shape[0]
    xr = x.reshape(rows, dl, di, dr)
    out = np.einsum("xajb,jk->xakb", xr, op, optimize=True)
    return out.reshape(rows, dl * di * dr)


def tensor_embed(op: LocalOperator, target: IntervalSupport, d: Optional[int] = None) -> LocalOperator:
    """Pad ``op`` with identities so that it acts on ``target``."""
    if not target.contains(op.support):
        raise SupportError(f"{op.support} is not contained in {target}")
    if d is None:
        d = op.local_dim()
    left = d ** (op.support.left - target.left)
    right = d ** (target.right - op.support.right)
    m = op.matrix
    if right > 1:
        m = np.kron(m, np.eye(right))
    if left > 1:
        m = np.kron(np.eye(left), m)
    return LocalOperator(target, m)


def embed_matrix(m: np.ndarray, support: IntervalSupport, target: IntervalSupport, d: int) -> np.ndarray:
    """Matrix-level shortcut for :func:`tensor_embed`."""
    if not target.contains(support):
        raise SupportError(f"{support} is not contained in {target}")
    right = d ** (target.right - support.right)
    left = d ** (support.left - target.left)
    if right > 1:
        m = np.kron(m, np.eye(right))
    if left > 1:
        m = np.kron(np.eye(left), m)
    return m


# --------------------------------------------------------------------------
# interval objects derived from a chain


def vacuum_vector(omega: np.ndarray, n_sites: int) -> np.ndarray:
    v = np.ones(1, dtype=complex)
    for _ in range(n_sites):
        v = np.kron(v, omega)
    return v


def vacuum_projectors(interval: IntervalSupport, spec) -> VacuumProjectors:
    vac = spec.vacuum(interval.edges)
    p_minus = np.outer(vac, vac.conj())
    p_plus = np.eye(len(vac)) - p_minus
    return VacuumProjectors(_readonly(p_minus), _readonly(p_plus), vac)


def free_hamiltonian(interval: IntervalSupport, spec) -> LocalOperator:
    """Sum of on-site terms over ``interval``."""
    return LocalOperator(interval, spec.h0(interval.edges))


def kronecker_sum(h: np.ndarray, n_sites: int) -> np.ndarray:
    d = h.shape[0]
    out = np.zeros((d**n_sites, d**n_sites), dtype=complex)
    for s in range(n_sites):
        out += np.kron(np.kron(np.eye(d**s), h), np.eye(d ** (n_sites - s - 1)))
    return out


def operator_norm(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def weighted_norm(v: LocalOperator, spec) -> float:
    """``‖(H0+1)^{-1/2} V (H0+1)^{-1/2}‖`` on the support of ``v``."""
    w = spec.h0_inv_sqrt(v.support.edges)
    return operator_norm(w @ v.matrix @ w)


def weighted_norm_matrix(m: np.ndarray, edges: int, spec) -> float:
    w = spec.h0_inv_sqrt(edges)
    return operator_norm(w @ m @ w)


def matrix_exponential(m: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a Padé approximant."""
    m = np.asarray(m)
    if not np.all(np.isfinite(m)):
        raise MatrixOverflowError("non-finite input to matrix exponential")
    with np.errstate(over="raise", invalid="raise"):
        try:
            out = sla.expm(m)
        except FloatingPointError as exc:
            raise MatrixOverflowError(str(exc)) from exc
    if not np.all(np.isfinite(out)):
        raise MatrixOverflowError("matrix exponential overflowed")
    return out


# --------------------------------------------------------------------------
# reduced resolvent


def complement_basis(vac: np.ndarray) -> Optional[np.ndarray]:
    """Orthonormal basis of the orthogonal complement of ``vac``.

    Returns ``None`` when ``vac`` is the first unit vector, in which case the
    complement is simply the trailing coordinates.
    """
    e0 = np.zeros_like(vac)
    e0[0] = 1.0
    if np.array_equal(vac, e0):
        return None
    return sla.null_space(vac.conj()[None, :])


class ReducedResolvent:
    """Factorized inverse of ``P+ (G - E - z) P+`` restricted to the range of ``P+``."""

    def __init__(self, g: np.ndarray, e: complex, z: complex, vac: np.ndarray,
                 rcond_threshold: float = RCOND_THRESHOLD):
        self.vac = vac
        self.q = complement_basis(vac)
        shifted = g - (e + z) * np.eye(g.shape[0])
        if self.q is None:
            block = shifted[1:, 1:]
        else:
            block = self.q.conj().T @ shifted @ self.q
        self.block = block
        if block.shape[0] == 0:
            self.rcond = 1.0
        else:
            self.rcond = 1.0 / np.linalg.cond(block)
        if not np.isfinite(self.rcond) or self.rcond < rcond_threshold:
            raise SingularRestrictionError(
                f"excited-block reciprocal condition number {self.rcond:.3e} below {rcond_threshold:g}")
        self._lu = sla.lu_factor(block)

    def _down(self, x):
        return x[1:] if self.q is None else self.q.conj().T @ x

    def _up(self, y):
        if self.q is None:
            return np.concatenate([np.zeros((1,) + y.shape[1:], dtype=complex), y])
        return self.q @ y

    def apply(self, x: np.ndarray) -> np.ndarray:
        """``R @ x``."""
        return self._up(sla.lu_solve(self._lu, self._down(x)))

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        """``R^† @ x``."""
        return self._up(sla.lu_solve(self._lu, self._down(x), trans=2))

    def matrix(self) -> np.ndarray:
        inv = sla.lu_solve(self._lu, np.eye(self.block.shape[0]))
        if self.q is None:
            out = np.zeros((len(self.vac), len(self.vac)), dtype=complex)
            out[1:, 1:] = inv
            return out
        return self.q @ inv @ self.q.conj().T


def reduced_resolvent(g: LocalOperator, e: complex, z: complex, proj: VacuumProjectors) -> LocalOperator:
    """Inverse of ``P+ (G - E - z) P+`` on the excited range, zero on the vacuum."""
    rr = ReducedResolvent(g.matrix, e, z, proj.vacuum)
    return LocalOperator(g.support, rr.matrix())


def neumann_reduced_resolvent(h0: np.ndarray, g: np.ndarray, e: complex, z: complex,
                              vac: np.ndarray, tol: float = 1e-16, max_terms: int = 2000):
    """Reduced resolvent by expansion around the free resolvent.

    With ``A = (P+ (H0 - z) P+)^{-1/2}`` and ``W = P+ (G - E - H0) P+`` this sums
    ``A Σ_l (-A W A)^l A``. Returns ``(matrix, n_terms, ratio)`` where ``ratio``
    is the norm of the expansion kernel ``A W A``.
    """
    dim = h0.shape[0]
    p_plus = np.eye(dim) - np.outer(vac, vac.conj())
    lam, vecs = np.linalg.eigh(h0)
    excited = lam > 0.5
    vecs = vecs[:, excited]
    root = 1.0 / np.sqrt(lam[excited].astype(complex) - z)
    a = (vecs * root) @ vecs.conj().T
    w = p_plus @ (g - e * np.eye(dim) - h0) @ p_plus
    kernel = -(a @ w @ a)
    ratio = operator_norm(kernel)
    term = (vecs @ vecs.conj().T).astype(complex)
    total = term.copy()
    n = 1
    scale = operator_norm(term)
    while n < max_terms:
        term = kernel @ term
        tn = operator_norm(term)
        total = total + term
        n += 1
        if tn <= tol * scale:
            break
        if not np.isfinite(tn) or tn > 1e12 * scale:
            raise SeriesDivergenceError(f"Neumann series diverged (kernel norm {ratio:.3f})")
    else:
        raise SeriesDivergenceError(f"Neumann series not converged after {max_terms} terms "
                                    f"(kernel norm {ratio:.3f})")
    return a @ total @ a, n, ratio
