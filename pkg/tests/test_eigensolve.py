"""Eigensolvers (iterative vs dense oracle), shifted solves, block lemma."""

import numpy as np
import pytest

from shortpath import eigensolve, hilbert, instances
from shortpath.eigensolve import (
    BlockMatrixInput,
    EigensolveError,
    NearSingularShift,
    block_lemma_check,
    dense_spectrum,
    extreme_eigs,
    operator_matrix,
    solve_shifted,
)
from shortpath.hilbert import MatrixFreeOperator, OperatorSpec

from conftest import hand_single_term, hand_triangle


def _hs_op(inst, big_b, k, block=None):
    table = hilbert.evaluate_hz(inst)
    return MatrixFreeOperator(
        OperatorSpec("HS", s=1.0, big_b=big_b, k=k, parity_block=block), table)


def test_dense_spectrum_of_hand_instance():
    # H = diag(1,-1,-1,1) - (1/2) X_offdiag for N=2 single term, B=1, K=1
    res = dense_spectrum(_hs_op(hand_single_term(), 1.0, 1))
    mat = operator_matrix(_hs_op(hand_single_term(), 1.0, 1))
    assert np.allclose(mat, mat.T)
    assert np.allclose(res.eigenvalues, np.linalg.eigvalsh(mat), atol=1e-12)
    assert np.all(res.residuals < 1e-10)


def test_dense_cap_enforced():
    with pytest.raises(EigensolveError, match="dense cap"):
        dense_spectrum(np.eye(4), dim_cap=2)


def test_extreme_eigs_matches_dense_with_degeneracy():
    # triangle ground space is 6-fold degenerate: the iterative path must
    # recover all copies via deflation
    op = _hs_op(hand_triangle(), 0.0, 1)
    it = extreme_eigs(op, 7)
    de = dense_spectrum(op)
    assert np.allclose(it.eigenvalues, de.eigenvalues[:7], atol=1e-9)
    # recovered vectors are orthonormal
    g = it.eigenvectors.T @ it.eigenvectors
    assert np.allclose(g, np.eye(7), atol=1e-8)


def test_extreme_eigs_small_full_spectrum():
    # N=2: requesting all 4 eigenpairs exercises the krylov-exhaustion path
    op = _hs_op(hand_single_term(), 1.0, 1)
    it = extreme_eigs(op, 4)
    de = dense_spectrum(op)
    assert np.allclose(it.eigenvalues, de.eigenvalues, atol=1e-9)


def test_extreme_eigs_with_index_deflation():
    inst = instances.generate("sk_pm", 6, seed=1)
    table = hilbert.evaluate_hz(inst)
    ground = hilbert.ground_space(table)
    op = MatrixFreeOperator(
        OperatorSpec("QHSQ", s=1.0, big_b=0.5, k=2, parity_block="even"),
        table, ground)
    it = extreme_eigs(op, 1, deflate_indices=ground.ground_indices)
    mat = operator_matrix(op)
    even, _ = hilbert.parity_masks(6)
    keep = even.copy()
    keep[ground.ground_indices] = False
    sub = mat[np.ix_(keep, keep)]
    assert it.eigenvalues[0] == pytest.approx(np.linalg.eigvalsh(sub)[0], abs=1e-9)


def test_extreme_eigs_rejects_oversized_requests():
    op = _hs_op(hand_single_term(), 1.0, 1)
    with pytest.raises(EigensolveError, match="deflated subspace"):
        extreme_eigs(op, 5)


def test_solve_shifted_against_dense_inverse():
    inst = instances.generate("sk_pm", 6, seed=4)
    table = hilbert.evaluate_hz(inst)
    ground = hilbert.ground_space(table)
    op = MatrixFreeOperator(OperatorSpec("QHSQ", s=1.0, big_b=0.6, k=1),
                            table, ground)
    rng = np.random.default_rng(5)
    rhs = rng.standard_normal(64)
    rhs[ground.ground_indices] = 0.0
    shift = table.e0 - 0.5  # safely below the Q spectrum
    x = solve_shifted(op, shift, rhs, deflate_indices=ground.ground_indices)
    mat = operator_matrix(op)
    keep = np.ones(64, dtype=bool)
    keep[ground.ground_indices] = False
    sub = shift * np.eye(keep.sum()) - mat[np.ix_(keep, keep)]
    expect = np.linalg.solve(sub, rhs[keep])
    assert np.allclose(x[keep], expect, atol=1e-7 * np.linalg.norm(expect))
    assert np.allclose(x[ground.ground_indices], 0.0)


def test_solve_shifted_near_singular_reports_gap():
    op = _hs_op(hand_single_term(), 0.0, 1)
    # shift exactly on an eigenvalue with rhs overlapping the eigenvector:
    # the system is inconsistent and the solver must refuse
    with pytest.raises(NearSingularShift, match="distance"):
        solve_shifted(op, -1.0, np.ones(4))


def test_block_lemma_hand_example():
    # A=[0], C=[1], B=[0.5]: eigenvalues (1 +- sqrt(2))/2
    rep = block_lemma_check(BlockMatrixInput(
        a_block=np.array([[0.0]]), b_block=np.array([[0.5]]),
        c_block=np.array([[1.0]])))
    assert rep.applicable and rep.all_pass
    assert rep.b_norm == 0.5
    assert rep.e_c_min == 1.0


def test_block_lemma_not_applicable_without_separation():
    rep = block_lemma_check(BlockMatrixInput(
        a_block=np.array([[1.0]]), b_block=np.array([[0.1]]),
        c_block=np.array([[0.5]])))
    assert not rep.applicable
    assert "E_C^min" in rep.reason


def test_block_lemma_requires_symmetry():
    with pytest.raises(EigensolveError, match="symmetric"):
        block_lemma_check(BlockMatrixInput(
            a_block=np.array([[0.0, 1.0], [0.0, 0.0]]),
            b_block=np.zeros((2, 1)), c_block=np.array([[5.0]])))


def test_block_lemma_random_sweep():
    rng = np.random.default_rng(42)
    for _ in range(100):
        n0 = int(rng.integers(1, 4))
        m = int(rng.integers(2, 9))
        a = rng.standard_normal((n0, n0))
        a = 0.5 * (a + a.T)
        c = rng.standard_normal((m, m))
        c = 0.5 * (c + c.T)
        c += (3.0 + abs(np.linalg.eigvalsh(a)).max()
              - np.linalg.eigvalsh(c)[0]) * np.eye(m)
        b = 0.5 * rng.standard_normal((n0, m))
        rep = block_lemma_check(BlockMatrixInput(a, b, c))
        assert rep.applicable
        assert rep.all_pass, rep.items
