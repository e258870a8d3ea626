"""Eigenpairs and shifted linear solves for the matrix-free operators.

The iterative path is a Lanczos iteration with full reorthogonalization and
explicit deflation; degenerate bands are resolved by finding eigenpairs one at
a time and deflating each converged vector.  dense_spectrum is the independent
oracle used by the property tests.  block_lemma_check verifies the three
block-matrix eigenvalue/overlap facts used by the theorem pipelines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import LinearOperator, minres

from .hilbert import MatrixFreeOperator

DENSE_DIM_CAP = 1 << 13
_LANCZOS_SEED = 0x5EED


class EigensolveError(RuntimeError):
    pass


class NearSingularShift(EigensolveError):
    """Shift is too close to the (deflated) spectrum for a stable solve."""


@dataclass
class EigenResult:
    eigenvalues: np.ndarray          # ascending
    eigenvectors: np.ndarray | None  # columns, aligned with eigenvalues
    residuals: np.ndarray


class _Deflator:
    """Orthogonal projector onto the complement of basis indices plus vectors."""

    def __init__(self, dim: int, indices=None, vectors=None):
        self.dim = dim
        self.indices = (
            np.asarray(sorted(set(int(i) for i in indices)), dtype=np.int64)
            if indices is not None and len(indices) else None
        )
        basis = None
        if vectors is not None and len(vectors):
            cols = np.column_stack([np.asarray(v, dtype=np.float64) for v in vectors])
            if self.indices is not None:
                cols[self.indices, :] = 0.0
            q, r = np.linalg.qr(cols)
            keep = np.abs(np.diag(r)) > 1e-12
            basis = q[:, keep] if keep.any() else None
        self.basis = basis

    @property
    def rank(self) -> int:
        n = 0 if self.indices is None else self.indices.size
        return n + (0 if self.basis is None else self.basis.shape[1])

    def project(self, x: np.ndarray) -> np.ndarray:
        y = x.copy()
        if self.indices is not None:
            y[self.indices] = 0.0
        if self.basis is not None:
            y -= self.basis @ (self.basis.T @ y)
        return y

    def with_vectors(self, extra: list[np.ndarray]) -> "_Deflator":
        vecs = [] if self.basis is None else [self.basis[:, j] for j in range(self.basis.shape[1])]
        return _Deflator(self.dim, self.indices, vecs + extra)


def operator_matrix(op: MatrixFreeOperator) -> np.ndarray:
    """Materialize the dense symmetric matrix of a matrix-free operator."""
    return op.apply(np.eye(op.dim))


def dense_spectrum(op_or_matrix, dim_cap: int = DENSE_DIM_CAP,
                   want_vectors: bool = True) -> EigenResult:
    """Full dense spectrum (oracle path).  Accepts a MatrixFreeOperator or an
    explicit symmetric matrix."""
    if isinstance(op_or_matrix, MatrixFreeOperator):
        if op_or_matrix.dim > dim_cap:
            raise EigensolveError(
                f"dimension {op_or_matrix.dim} exceeds the dense cap {dim_cap}"
            )
        mat = operator_matrix(op_or_matrix)
    else:
        mat = np.asarray(op_or_matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise EigensolveError(f"expected a square matrix, got shape {mat.shape}")
        if mat.shape[0] > dim_cap:
            raise EigensolveError(f"dimension {mat.shape[0]} exceeds the dense cap {dim_cap}")
    if not want_vectors:
        vals = np.linalg.eigvalsh(mat)
        return EigenResult(vals, None, np.zeros_like(vals))
    vals, vecs = np.linalg.eigh(mat)
    res = np.linalg.norm(mat @ vecs - vecs * vals, axis=0)
    return EigenResult(vals, vecs, res)


def _lanczos_lowest(op: MatrixFreeOperator, deflator: _Deflator, tol: float,
                    rng: np.random.Generator, max_krylov: int, max_restarts: int):
    """One lowest eigenpair of op restricted to the deflator's complement."""
    dim = op.dim
    scale = op.norm_bound()
    v = None
    for _ in range(8):
        cand = rng.standard_normal(dim)
        if op.parity_mask is not None:
            cand[~op.parity_mask] = 0.0
        cand = deflator.project(cand)
        nrm = np.linalg.norm(cand)
        if nrm > 1e-8:
            v = cand / nrm
            break
    if v is None:
        raise EigensolveError("deflated subspace exhausted: no start vector available")

    best_residual = np.inf
    for _restart in range(max_restarts):
        basis = [v]
        alphas: list[float] = []
        betas: list[float] = []
        for _j in range(max_krylov):
            w = deflator.project(op.apply(basis[-1]))
            alphas.append(float(basis[-1] @ w))
            w -= alphas[-1] * basis[-1]
            if len(basis) > 1:
                w -= betas[-1] * basis[-2]
            vmat = np.column_stack(basis)
            for _ in range(2):  # full reorthogonalization, twice
                w -= vmat @ (vmat.T @ w)
            w = deflator.project(w)
            beta = float(np.linalg.norm(w))
            if beta < 1e-13 * max(scale, 1.0):
                break  # invariant subspace reached
            betas.append(beta)
            basis.append(w / beta)
        if betas and len(betas) == len(alphas):
            betas = betas[:-1]
            basis = basis[:-1]
        theta, y = eigh_tridiagonal(
            np.asarray(alphas), np.asarray(betas), select="i", select_range=(0, 0)
        )
        ritz = np.column_stack(basis) @ y[:, 0]
        ritz /= np.linalg.norm(ritz)
        lam = float(theta[0])
        residual = float(np.linalg.norm(deflator.project(op.apply(ritz)) - lam * ritz))
        if residual <= tol * max(scale, 1.0):
            return lam, ritz, residual
        best_residual = min(best_residual, residual)
        v = ritz
    raise EigensolveError(
        f"Lanczos failed to converge after {max_restarts} restarts; "
        f"best residual {best_residual:.3e}"
    )


def extreme_eigs(op: MatrixFreeOperator, how_many: int, deflate_indices=None,
                 deflate_vectors=None, tol: float = 1e-11, max_krylov: int = 120,
                 max_restarts: int = 60, seed: int = _LANCZOS_SEED) -> EigenResult:
    """The `how_many` lowest eigenpairs of op restricted to the orthogonal
    complement of the deflation set.  Degenerate copies are recovered by
    deflating each converged eigenvector and re-running."""
    if how_many < 1:
        raise EigensolveError(f"how_many must be >= 1, got {how_many}")
    base = _Deflator(op.dim, deflate_indices, deflate_vectors)
    free_dim = op.dim - base.rank
    if op.parity_mask is not None:
        free_dim = min(free_dim, int(op.parity_mask.sum()))
    if how_many > free_dim:
        raise EigensolveError(
            f"requested {how_many} eigenpairs but the deflated subspace has "
            f"dimension {free_dim}"
        )
    rng = np.random.default_rng(seed)
    vals: list[float] = []
    vecs: list[np.ndarray] = []
    res: list[float] = []
    deflator = base
    for _ in range(how_many):
        lam, v, r = _lanczos_lowest(op, deflator, tol, rng, max_krylov, max_restarts)
        vals.append(lam)
        vecs.append(v)
        res.append(r)
        deflator = deflator.with_vectors([v])
    order = np.argsort(vals, kind="stable")
    return EigenResult(
        eigenvalues=np.asarray(vals)[order],
        eigenvectors=np.column_stack(vecs)[:, order],
        residuals=np.asarray(res)[order],
    )


def solve_shifted(op: MatrixFreeOperator, shift: float, rhs: np.ndarray,
                  deflate_indices=None, deflate_vectors=None,
                  rel_tol: float = 1e-10) -> np.ndarray:
    """Solve (shift - op) x = rhs on the complement of the deflation set.

    Minimum-residual Krylov solve; the returned x is orthogonal to the
    deflation set and satisfies ||(shift - op)x - rhs|| <= rel_tol * ||rhs||.
    """
    deflator = _Deflator(op.dim, deflate_indices, deflate_vectors)
    b = deflator.project(np.asarray(rhs, dtype=np.float64))
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)

    def matvec(x):
        xp = deflator.project(x)
        return deflator.project(shift * xp - op.apply(xp))

    lin = LinearOperator((op.dim, op.dim), matvec=matvec, dtype=np.float64)
    x = np.zeros_like(b)
    maxiter = max(4 * op.dim, 200)
    for _attempt in range(3):
        r = b - matvec(x)
        if np.linalg.norm(r) <= rel_tol * bnorm:
            return deflator.project(x)
        dx, _info = minres(lin, r, rtol=1e-13, maxiter=maxiter)
        x = deflator.project(x + dx)
    r = b - matvec(x)
    if np.linalg.norm(r) <= rel_tol * bnorm:
        return x
    xn = np.linalg.norm(x)
    gap_estimate = np.linalg.norm(matvec(x / xn)) if xn > 0 else 0.0
    raise NearSingularShift(
        f"shifted solve stagnated at relative residual "
        f"{np.linalg.norm(r) / bnorm:.3e}; estimated distance from the shift "
        f"to the deflated spectrum ~ {gap_estimate:.3e}"
    )


@dataclass
class LemmaGenReport:
    """Verification record for the three block-matrix facts."""

    applicable: bool
    e_a_min: float
    e_a_max: float
    e_c_min: float
    b_norm: float
    items: list  # (name, passed, margin)
    reason: str | None = None

    @property
    def all_pass(self) -> bool:
        return self.applicable and all(p for _, p, _ in self.items)


@dataclass(frozen=True)
class BlockMatrixInput:
    a_block: np.ndarray  # n0 x n0 symmetric
    b_block: np.ndarray  # n0 x m
    c_block: np.ndarray  # m x m symmetric


def block_lemma_check(inp: BlockMatrixInput) -> LemmaGenReport:
    """Assemble H = [[A, B], [B^T, C]], diagonalize densely, and check the
    three separation facts (band counting, 2x2 lower bound, low-band overlap
    with the upper block)."""
    a = np.asarray(inp.a_block, dtype=np.float64)
    b = np.asarray(inp.b_block, dtype=np.float64)
    c = np.asarray(inp.c_block, dtype=np.float64)
    for name, m in (("a_block", a), ("c_block", c)):
        if np.max(np.abs(m - m.T), initial=0.0) > 1e-12:
            raise EigensolveError(f"{name} is not symmetric to 1e-12")
    n0 = a.shape[0]
    m_dim = c.shape[0]
    if b.shape != (n0, m_dim):
        raise EigensolveError(f"b_block shape {b.shape} inconsistent with ({n0}, {m_dim})")

    ea = np.linalg.eigvalsh(a)
    ec = np.linalg.eigvalsh(c)
    e_a_min, e_a_max = float(ea[0]), float(ea[-1])
    e_c_min = float(ec[0])
    b_norm = float(np.linalg.norm(b, 2)) if b.size else 0.0

    if e_c_min <= e_a_max:
        return LemmaGenReport(
            applicable=False, e_a_min=e_a_min, e_a_max=e_a_max, e_c_min=e_c_min,
            b_norm=b_norm, items=[],
            reason=f"E_C^min={e_c_min} does not exceed E_A^max={e_a_max}",
        )

    h = np.block([[a, b], [b.T, c]])
    vals, vecs = np.linalg.eigh(h)

    # item 1: exactly n0 eigenvalues at or below E_A^max, the rest at or above E_C^min
    low, high = vals[:n0], vals[n0:]
    margin1 = min(
        e_a_max - float(low.max()),
        float(high.min()) - e_c_min if high.size else np.inf,
    )
    item1 = ("band_counting", bool(margin1 >= -1e-10), float(margin1))

    # item 2: lambda_min(H) >= lambda_min([[E_A^min, |B|], [|B|, E_C^min]])
    #         >= E_A^min - |B|^2 / (E_C^min - E_A^min)
    two = np.array([[e_a_min, b_norm], [b_norm, e_c_min]])
    two_min = float(np.linalg.eigvalsh(two)[0])
    closed = e_a_min - b_norm**2 / (e_c_min - e_a_min)
    margin2 = min(float(vals[0]) - two_min, two_min - closed)
    item2 = ("two_by_two_bound", bool(margin2 >= -1e-10), float(margin2))

    # item 3: every unit psi in the low band has <psi|P|psi> >= 1 - |B|^2 / sep^2
    # (the Davis-Kahan-style bound |(1-P)psi| <= |B|/sep, squared)
    sep = e_c_min - e_a_max
    bound3 = 1.0 - (b_norm / sep) ** 2
    u = vecs[:, :n0]
    gram = u[:n0, :].T @ u[:n0, :]  # <psi|P|psi> over the low band = min eig of this
    min_overlap = float(np.linalg.eigvalsh(gram)[0])
    margin3 = min_overlap - bound3
    item3 = ("low_band_overlap", bool(margin3 >= -1e-10), float(margin3))

    return LemmaGenReport(
        applicable=True, e_a_min=e_a_min, e_a_max=e_a_max, e_c_min=e_c_min,
        b_norm=b_norm, items=[item1, item2, item3],
    )
