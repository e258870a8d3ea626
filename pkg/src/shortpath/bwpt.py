"""Modified Brillouin-Wigner machinery for H_s = H_Z - sB(X/N)^K.

The effective Hamiltonian h(omega, s) acts on the ground space of H_Z; its
geometric series is resummed into one excited-subspace linear solve per ground
index.  The eigenvector series phi uses the shifted reference J_0 = H_Z +
zeta*P, which removes the excited-space projector from the series and lets the
series be re-expressed as a random walk with strictly positive weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import eigensolve
from .hilbert import (
    DiagonalTable,
    GroundSpaceInfo,
    HsParams,
    MatrixFreeOperator,
    OperatorSpec,
    StateVector,
    parity_masks,
    psi_plus_overlap,
)
from .instances import Instance

DEFAULT_ZETA = 0.5


class BwptError(RuntimeError):
    pass


@dataclass
class BwContext:
    """Self-consistent effective-Hamiltonian data at s = 1.

    `block` is 'even'/'odd' for even K (the irreducible block containing a
    ground state) and None for odd K.  `ground_block_indices` are the ground
    basis indices inside that block; xi0 is the positive unit ground vector of
    h(omega, 1) over those indices.
    """

    zeta: float
    omega: float
    eq0: float
    xi0: np.ndarray
    h_matrix: np.ndarray
    fixed_point_residual: float
    block: str | None
    ground_block_indices: np.ndarray


@dataclass
class OverlapReport:
    inner_psi_plus_phi: float
    inner_psi_plus_gs: float
    xi0_l1: float
    phi_norm: float
    analytic_bound: float
    log2_overlap_margin: float


@dataclass
class WalkEstimate:
    series_estimate: float
    std_error: float
    t_truncation: int
    samples: int
    seed: int


def choose_parity_block(ground: GroundSpaceInfo, k: int,
                        parity_choice: str | None = None) -> str | None:
    """For even K pick the irreducible parity block holding a ground state;
    odd K needs no block."""
    if k % 2 == 1:
        return None
    parities = np.array([int(u).bit_count() & 1 for u in ground.ground_indices])
    has_even = bool(np.any(parities == 0))
    has_odd = bool(np.any(parities == 1))
    if parity_choice is not None:
        want_odd = parity_choice == "odd"
        if (want_odd and not has_odd) or (not want_odd and not has_even):
            raise BwptError(f"no ground state of H_Z lies in the {parity_choice} block")
        return parity_choice
    return "even" if has_even else "odd"


def _block_ground_indices(ground: GroundSpaceInfo, n_qubits: int,
                          block: str | None) -> np.ndarray:
    if block is None:
        return ground.ground_indices
    even, _odd = parity_masks(n_qubits)
    keep = even[ground.ground_indices] if block == "even" else ~even[ground.ground_indices]
    idx = ground.ground_indices[keep]
    if idx.size == 0:
        raise BwptError(f"no ground state in the {block} block")
    return idx


def _q_block_dim(table: DiagonalTable, n_block_ground: int,
                 block: str | None) -> int:
    """Number of excited basis states inside the chosen parity block."""
    if block is None:
        size = 1 << table.n_qubits
    else:
        even, odd = parity_masks(table.n_qubits)
        size = int((even if block == "even" else odd).sum())
    return size - n_block_ground


def _v_apply(table: DiagonalTable, params: HsParams, amps: np.ndarray) -> np.ndarray:
    """V = -B (X/N)^K applied to an amplitude array."""
    xk = MatrixFreeOperator(OperatorSpec("XK", k=params.k), table)
    return -params.big_b * xk.apply(amps)


def effective_hamiltonian(table: DiagonalTable, ground: GroundSpaceInfo,
                          params: HsParams, omega: float,
                          block: str | None = None,
                          eq0: float | None = None) -> np.ndarray:
    """h(omega, s) over the (block) ground indices, geometric series resummed:
    h = E0*I + s*M1 + s^2*M2 with M2 from one Q-subspace solve per column.

    `eq0`, when given, is the lowest eigenvalue of Q H_s Q (computed if absent)
    and omega must lie strictly below it.
    """
    idx = _block_ground_indices(ground, table.n_qubits, block)
    qhsq = MatrixFreeOperator(
        OperatorSpec("QHSQ", s=params.s, big_b=params.big_b, k=params.k,
                     parity_block=block),
        table, ground,
    )
    if eq0 is None:
        if _q_block_dim(table, idx.size, block) == 0:
            eq0 = math.inf  # no excited states in the block
        else:
            eq0 = float(eigensolve.extreme_eigs(
                qhsq, 1, deflate_indices=ground.ground_indices).eigenvalues[0])
    if not omega < eq0:
        raise BwptError(
            f"omega={omega} is not below the Q-restricted spectrum (E^Q={eq0})"
        )
    n = idx.size
    h = table.e0 * np.eye(n)
    if params.big_b == 0.0 or params.s == 0.0:
        return h
    dim = 1 << table.n_qubits
    ground_mask_idx = ground.ground_indices
    for col, u in enumerate(idx):
        e_u = np.zeros(dim)
        e_u[u] = 1.0
        v_u = _v_apply(table, params, e_u)
        h[:, col] += params.s * v_u[idx]
        qv = v_u.copy()
        qv[ground_mask_idx] = 0.0
        x_u = eigensolve.solve_shifted(qhsq, omega, qv,
                                       deflate_indices=ground_mask_idx)
        h[:, col] += params.s**2 * _v_apply(table, params, x_u)[idx]
    asym = np.max(np.abs(h - h.T), initial=0.0)
    if asym > 1e-10 * max(1.0, np.max(np.abs(h))):
        raise BwptError(f"effective Hamiltonian asymmetry {asym:.3e} exceeds tolerance")
    return 0.5 * (h + h.T)


def solve_self_consistent(table: DiagonalTable, ground: GroundSpaceInfo,
                          params: HsParams, zeta: float = DEFAULT_ZETA,
                          parity_choice: str | None = None) -> BwContext:
    """Set omega = E_{0,1} (lowest eigenvalue of H_1, block-restricted for even
    K), build h(omega, 1), and extract the positive ground vector xi0."""
    block = choose_parity_block(ground, params.k, parity_choice)
    idx = _block_ground_indices(ground, table.n_qubits, block)
    hs = MatrixFreeOperator(
        OperatorSpec("HS", s=params.s, big_b=params.big_b, k=params.k,
                     parity_block=block),
        table,
    )
    qhsq = MatrixFreeOperator(
        OperatorSpec("QHSQ", s=params.s, big_b=params.big_b, k=params.k,
                     parity_block=block),
        table, ground,
    )
    omega = float(eigensolve.extreme_eigs(hs, 1).eigenvalues[0])
    if _q_block_dim(table, idx.size, block) == 0:
        eq0 = math.inf  # the ground space fills the whole block
    else:
        eq0 = float(eigensolve.extreme_eigs(
            qhsq, 1, deflate_indices=ground.ground_indices).eigenvalues[0])
    h = effective_hamiltonian(table, ground, params, omega, block=block, eq0=eq0)

    scale = max(1.0, abs(table.e0))
    if np.max(np.abs(h - table.e0 * np.eye(idx.size))) <= 1e-12 * scale:
        # V contributes nothing (B = 0): any positive unit vector is a valid
        # ground vector of h; tie-break to the uniform one.
        xi0 = np.full(idx.size, idx.size**-0.5)
        lam = table.e0
    else:
        vals, vecs = np.linalg.eigh(h)
        lam = float(vals[0])
        xi0 = vecs[:, 0]
        if xi0.sum() < 0:
            xi0 = -xi0
        if np.min(xi0) < -1e-10:
            raise BwptError(
                "ground vector of h has mixed signs after the global flip; "
                "the even-K parity block was probably not applied"
            )
        xi0 = np.clip(xi0, 0.0, None)
        xi0 /= np.linalg.norm(xi0)
    return BwContext(
        zeta=zeta, omega=omega, eq0=eq0, xi0=xi0, h_matrix=h,
        fixed_point_residual=abs(lam - omega), block=block,
        ground_block_indices=idx,
    )


def _j0_plus_v_operator(table: DiagonalTable, ground: GroundSpaceInfo,
                        params: HsParams, zeta: float,
                        block: str | None) -> MatrixFreeOperator:
    """J0 + sV as an HS operator over the zeta-shifted diagonal."""
    energies = table.energies.copy()
    energies[ground.ground_indices] += zeta
    shifted = DiagonalTable(
        n_qubits=table.n_qubits, energies=energies,
        e0=float(energies.min()), gap=None,
    )
    return MatrixFreeOperator(
        OperatorSpec("HS", s=params.s, big_b=params.big_b, k=params.k,
                     parity_block=block),
        shifted,
    )


def phi_exact(ctx: BwContext, instance: Instance, table: DiagonalTable,
              ground: GroundSpaceInfo, params: HsParams) -> tuple[StateVector, OverlapReport]:
    """Resum the phi series exactly: solve (omega - J0 - sV) x = (omega - J0) xi0.

    The right-hand side is ground-supported, so (omega - J0) xi0 collapses to
    (omega - E0 - zeta) * xi0.  Verifies that x is the H_s eigenvector at omega
    and fills the overlap report.
    """
    n = table.n_qubits
    dim = 1 << n
    op = _j0_plus_v_operator(table, ground, params, ctx.zeta, ctx.block)
    lam_min = float(eigensolve.extreme_eigs(op, 1).eigenvalues[0])
    if not ctx.omega < lam_min - 1e-12:
        raise BwptError(
            f"omega={ctx.omega} is not below the spectrum of J0 + V "
            f"(lambda_min={lam_min}); the series does not converge"
        )
    rhs = np.zeros(dim)
    rhs[ctx.ground_block_indices] = (ctx.omega - table.e0 - ctx.zeta) * ctx.xi0
    phi = eigensolve.solve_shifted(op, ctx.omega, rhs)

    hs = MatrixFreeOperator(
        OperatorSpec("HS", s=params.s, big_b=params.big_b, k=params.k,
                     parity_block=ctx.block),
        table,
    )
    phi_norm = float(np.linalg.norm(phi))
    eig_residual = float(np.linalg.norm(hs.apply(phi) - ctx.omega * phi))
    if eig_residual > 1e-8 * phi_norm:
        raise BwptError(
            f"phi is not an H_s eigenvector: residual {eig_residual:.3e} "
            f"exceeds 1e-8 * |phi|"
        )
    gs = eigensolve.extreme_eigs(hs, 1)
    psi01 = gs.eigenvectors[:, 0]
    if psi01.sum() < 0:
        psi01 = -psi01
    align = float(phi @ psi01) / phi_norm
    if align < 1 - 1e-8:
        raise BwptError(f"phi does not align with the H_s ground state ({align})")

    inner_phi = psi_plus_overlap(StateVector(n, phi))
    inner_gs = psi_plus_overlap(StateVector(n, psi01))
    d = instance.degree
    report = OverlapReport(
        inner_psi_plus_phi=inner_phi,
        inner_psi_plus_gs=inner_gs,
        xi0_l1=float(ctx.xi0.sum()),
        phi_norm=phi_norm,
        analytic_bound=(
            2.0 ** (-n / 2.0)
            * analytic_lower_bound(n, d, params.k, params.big_b, table.e0)[0]
            if table.e0 < 0 else float("nan")
        ),
        log2_overlap_margin=math.log2(inner_phi) + n / 2.0 if inner_phi > 0 else float("-inf"),
    )
    return StateVector(n, phi), report


def analytic_lower_bound(n_qubits: int, degree: int, k: int, big_b: float,
                         e0: float) -> tuple[float, float]:
    """Leading factor exp(BN / (2DK|E0|)) of the overlap lower bound, and its
    log2.  The unquantified (1 - o(1)) correction is not applied."""
    if e0 >= 0:
        raise BwptError(f"analytic bound requires E0 < 0, got {e0}")
    if min(n_qubits, degree, k) < 1:
        raise BwptError("N, D, K must all be >= 1")
    exponent = big_b * n_qubits / (2.0 * degree * k * abs(e0))
    return math.exp(exponent), exponent / math.log(2.0)


def walk_estimate(ctx: BwContext, instance: Instance, table: DiagonalTable,
                  ground: GroundSpaceInfo, params: HsParams, samples: int,
                  seed: int, cutoff: float = 1e-16) -> WalkEstimate:
    """Monte-Carlo estimate of the walk series sum_t B^t E[prod 1/(E'_u - E_{0,1})].

    Start states are drawn proportional to the xi0 entries; each macro-step is
    K independent uniformly random spin flips (the same spin may repeat).  One
    length-t_max walk per sample estimates every truncation level via partial
    products.
    """
    if samples < 1:
        raise BwptError("samples must be >= 1")
    if params.big_b == 0.0:
        return WalkEstimate(series_estimate=1.0, std_error=0.0, t_truncation=0,
                            samples=samples, seed=seed)
    n = table.n_qubits
    e0 = table.e0
    if e0 >= 0:
        raise BwptError("walk truncation bound requires E0 < 0")
    t_max = 10 * math.ceil(params.big_b * n / (2 * instance.degree * params.k * abs(e0))) + 100

    rng = np.random.default_rng(seed)
    probs = ctx.xi0 / ctx.xi0.sum()
    states = rng.choice(ctx.ground_block_indices, size=samples, p=probs).astype(np.int64)
    is_ground = ground.mask(n)
    energies = table.energies

    partial = np.ones(samples)
    totals = np.ones(samples)  # t = 0 term
    b_pow = 1.0
    t_used = 0
    for t in range(1, t_max + 1):
        flips = rng.integers(0, n, size=(params.k, samples))
        for row in flips:
            states ^= np.int64(1) << row
        denom = energies[states] + np.where(is_ground[states], ctx.zeta, 0.0) - ctx.omega
        if np.any(denom <= 0.0):
            bad = int(states[np.argmin(denom)])
            raise BwptError(
                f"non-positive walk denominator at basis state {bad}: "
                "omega lies above E'_u for a visited state"
            )
        partial /= denom
        b_pow *= params.big_b
        totals += b_pow * partial
        t_used = t
        running = float(totals.mean())
        if b_pow * float(partial.max()) < cutoff * running:
            break
    estimate = float(totals.mean())
    std_error = (
        float(totals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("inf")
    )
    return WalkEstimate(series_estimate=estimate, std_error=std_error,
                        t_truncation=t_used, samples=samples, seed=seed)
