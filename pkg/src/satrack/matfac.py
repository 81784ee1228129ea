"""Symmetric indefinite factorization with cheap rank-one updates.

A symmetric matrix A is factored as P A P' = L B L' with P a permutation,
L unit lower triangular, and B block diagonal with 1x1 and 2x2 symmetric
blocks. Pivots are chosen by the complete-pivoting rule (compare the largest
diagonal magnitude against the largest off-diagonal magnitude at ratio
alpha = (1 + sqrt(17))/8), which bounds every entry of L by
1/(1 - alpha) ~= 2.7808 and makes the inertia of B equal that of A.

Rank-one modifications A + sigma z z' are folded into existing factors in
O(p^2) arithmetic by propagating the rank-one term through the block pivots.
No pivoting happens during an update, so a pivot can collapse or an L entry
can leave the bounded range; both surface as FactorizationBreakdown and the
caller decides whether to refactorize or redraw the perturbation that
produced the update.

Solves go through the factored form in O(p^2): two unit-triangular solves
around a block-diagonal middle solve that uses closed-form 2x2
eigendecompositions. The middle factor must be positive definite at solve
time; preconditioning indefinite factors is the caller's job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .flops import FlopCounter

__all__ = [
    "ENTRY_BOUND",
    "AsymmetricMatrixError",
    "FactorizationBreakdown",
    "LBLFactors",
    "BlockEigen",
    "factorize",
    "rank_one_update",
    "block_eigen",
    "solve",
    "reconstruct",
    "inertia",
]

# complete pivoting keeps |L_ij| <= 1/(1 - alpha)
_PIVOT_ALPHA = (1.0 + math.sqrt(17.0)) / 8.0
ENTRY_BOUND = 1.0 / (1.0 - _PIVOT_ALPHA)
_ENTRY_SLACK = 1e-6
_SYMMETRY_RTOL = 1e-9
_PIVOT_RTOL = 1e-12


class AsymmetricMatrixError(ValueError):
    """Input matrix is measurably far from symmetric."""


class FactorizationBreakdown(RuntimeError):
    """A rank-one update collapsed a pivot or left the bounded-L range."""


@dataclass(frozen=True)
class LBLFactors:
    """Factors P A P' = L B L' of a symmetric matrix.

    ``perm`` holds the permutation as an index vector: row i of the permuted
    matrix is row perm[i] of A. ``blocks`` is the block diagonal of B in
    order, each entry a (1, 1) or (2, 2) symmetric array.
    """

    perm: np.ndarray
    lower: np.ndarray
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        p = self.lower.shape[0]
        if self.lower.ndim != 2 or self.lower.shape != (p, p):
            raise ValueError("L must be square")
        if self.perm.shape != (p,) or not np.array_equal(
            np.sort(self.perm), np.arange(p)
        ):
            raise ValueError("perm must be a permutation of 0..p-1")
        if not np.all(np.diag(self.lower) == 1.0):
            raise ValueError("L must have a unit diagonal")
        if np.any(np.triu(self.lower, 1) != 0.0):
            raise ValueError("L must be lower triangular")
        if np.max(np.abs(self.lower), initial=0.0) > ENTRY_BOUND + _ENTRY_SLACK:
            raise ValueError("L entry exceeds the complete-pivoting bound")
        sizes = 0
        for block in self.blocks:
            if block.shape not in ((1, 1), (2, 2)):
                raise ValueError(f"blocks must be 1x1 or 2x2, got {block.shape}")
            if not np.array_equal(block, block.T):
                raise ValueError("blocks must be symmetric")
            sizes += block.shape[0]
        if sizes != p:
            raise ValueError(f"block sizes sum to {sizes}, expected {p}")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def block_offsets(self) -> tuple[int, ...]:
        offsets, start = [], 0
        for block in self.blocks:
            offsets.append(start)
            start += block.shape[0]
        return tuple(offsets)


@dataclass(frozen=True)
class BlockEigen:
    """Per-block eigendecomposition Q diag(values) Q' of a block diagonal.

    ``rotations`` mirrors the block structure: 1x1 blocks contribute [[1.0]]
    and 2x2 blocks an orthogonal 2x2 factor with eigenvalues in descending
    order within the block.
    """

    rotations: tuple[np.ndarray, ...]
    values: np.ndarray

    def dense(self) -> np.ndarray:
        p = self.values.shape[0]
        q = np.zeros((p, p))
        start = 0
        for rot in self.rotations:
            m = rot.shape[0]
            q[start : start + m, start : start + m] = rot
            start += m
        return q


def _check_symmetric(a: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix must be finite")
    gap = np.linalg.norm(a - a.T)
    if gap > _SYMMETRY_RTOL * max(np.linalg.norm(a), 1e-300):
        raise AsymmetricMatrixError(
            f"asymmetry {gap:.3e} exceeds {_SYMMETRY_RTOL} of the matrix norm"
        )
    return 0.5 * (a + a.T)


def _swap(work: np.ndarray, lower: np.ndarray, perm: np.ndarray, i: int, j: int, k: int) -> None:
    # exchange rows/columns i and j of the working matrix, the corresponding
    # rows of the already-built part of L (columns < k), and the permutation
    if i == j:
        return
    work[[i, j], :] = work[[j, i], :]
    work[:, [i, j]] = work[:, [j, i]]
    lower[[i, j], :k] = lower[[j, i], :k]
    perm[[i, j]] = perm[[j, i]]


def factorize(a) -> LBLFactors:
    """Factor a symmetric matrix with complete (diagonal vs off-diagonal) pivoting."""
    work = _check_symmetric(np.array(a, dtype=float))
    p = work.shape[0]
    lower = np.eye(p)
    perm = np.arange(p)
    blocks: list[np.ndarray] = []
    k = 0
    while k < p:
        sub = work[k:, k:]
        m = sub.shape[0]
        diag_abs = np.abs(np.diag(sub))
        t = int(np.argmax(diag_abs))
        mu_diag = diag_abs[t]
        if m == 1:
            mu_off, r, s = 0.0, 0, 0
        else:
            off = np.abs(np.tril(sub, -1))
            r, s = np.unravel_index(int(np.argmax(off)), off.shape)
            mu_off = off[r, s]
        if mu_diag == 0.0 and mu_off == 0.0:
            # remaining submatrix is exactly zero; emit null pivots
            for _ in range(m):
                blocks.append(np.zeros((1, 1)))
            k = p
            break
        if mu_diag >= _PIVOT_ALPHA * mu_off:
            _swap(work, lower, perm, k, k + t, k)
            pivot = work[k, k]
            col = work[k + 1 :, k] / pivot
            lower[k + 1 :, k] = col
            work[k + 1 :, k + 1 :] -= pivot * np.outer(col, col)
            blocks.append(np.array([[pivot]]))
            k += 1
        else:
            # indefinite 2x2 pivot on the dominant off-diagonal pair
            _swap(work, lower, perm, k, k + s, k)
            _swap(work, lower, perm, k + 1, k + r, k)
            pivot_block = work[k : k + 2, k : k + 2].copy()
            coupling = work[k + 2 :, k : k + 2]
            l_block = np.linalg.solve(pivot_block, coupling.T).T
            lower[k + 2 :, k : k + 2] = l_block
            schur = l_block @ coupling.T
            work[k + 2 :, k + 2 :] -= 0.5 * (schur + schur.T)
            blocks.append(0.5 * (pivot_block + pivot_block.T))
            k += 2
    return LBLFactors(perm=perm, lower=lower, blocks=tuple(blocks))


def _solve_block(block: np.ndarray, rhs: np.ndarray, scale: float) -> np.ndarray:
    """Solve block @ x = rhs for a 1x1 or 2x2 block, or signal collapse."""
    if block.shape == (1, 1):
        pivot = block[0, 0]
        if abs(pivot) <= _PIVOT_RTOL * scale:
            raise FactorizationBreakdown(
                f"pivot collapsed to {pivot:.3e} during rank-one update"
            )
        return rhs / pivot
    det = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
    if abs(det) <= (_PIVOT_RTOL * scale) ** 2:
        raise FactorizationBreakdown(
            f"2x2 pivot determinant collapsed to {det:.3e} during rank-one update"
        )
    out = np.empty(2)
    out[0] = (block[1, 1] * rhs[0] - block[0, 1] * rhs[1]) / det
    out[1] = (block[0, 0] * rhs[1] - block[1, 0] * rhs[0]) / det
    return out


def rank_one_update(
    factors: LBLFactors, sigma: float, z, flops: FlopCounter | None = None
) -> LBLFactors:
    """Factors of A + sigma z z' from factors of A in O(p^2) arithmetic.

    Raises FactorizationBreakdown when a transformed pivot block becomes
    numerically singular or an updated L entry exceeds the bounded range;
    the factors are immutable, so the input remains valid either way.
    """
    z = np.asarray(z, dtype=float)
    p = factors.dim
    if z.shape != (p,):
        raise ValueError(f"update vector has shape {z.shape}, expected ({p},)")
    if not (np.isfinite(sigma) and np.all(np.isfinite(z))):
        raise ValueError("update must be finite")
    if sigma == 0.0 or not np.any(z):
        return factors

    permuted = z[factors.perm]
    w = solve_triangular(factors.lower, permuted, lower=True, unit_diagonal=True)
    if flops is not None:
        flops.add(p * (p - 1), phase="update-forward")

    lower = factors.lower.copy()
    residual = permuted.copy()  # Pz minus processed columns of L times w
    beta = sigma
    new_blocks: list[np.ndarray] = []
    start = 0
    for block in factors.blocks:
        m = block.shape[0]
        stop = start + m
        w_block = w[start:stop]
        updated = block + beta * np.outer(w_block, w_block)
        updated = 0.5 * (updated + updated.T)
        scale = float(np.max(np.abs(block), initial=0.0)
                      + abs(beta) * float(w_block @ w_block))
        gamma = _solve_block(updated, beta * w_block, scale)
        beta = beta - float(gamma @ w_block) * beta
        residual[start:] -= lower[start:, start:stop] @ w_block
        lower[stop:, start:stop] += np.outer(residual[stop:], gamma)
        new_blocks.append(updated)
        if flops is not None:
            tail = p - stop
            flops.add(2 * m * (p - start) + 2 * m * tail + 10 * m, phase="update-blocks")
        start = stop

    if np.max(np.abs(lower), initial=0.0) > ENTRY_BOUND + _ENTRY_SLACK:
        raise FactorizationBreakdown(
            "updated L entry exceeds the bounded range; refactorize or redraw"
        )
    return LBLFactors(perm=factors.perm.copy(), lower=lower, blocks=tuple(new_blocks))


def _eigen_2x2(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form symmetric 2x2 eigendecomposition, eigenvalues descending."""
    a, c, d = block[0, 0], block[0, 1], block[1, 1]
    if c == 0.0:
        return np.eye(2), np.array([a, d])
    tau = (d - a) / (2.0 * c)
    sign = 1.0 if tau >= 0.0 else -1.0
    t = sign / (abs(tau) + math.hypot(1.0, tau))
    cos = 1.0 / math.hypot(1.0, t)
    sin = t * cos
    values = np.array([a - t * c, d + t * c])
    rotation = np.array([[cos, sin], [-sin, cos]])
    if values[0] < values[1]:
        values = values[::-1]
        rotation = rotation[:, ::-1]
    return rotation, values


def block_eigen(blocks) -> BlockEigen:
    """Eigendecompose a block diagonal given as factors or a block sequence."""
    if isinstance(blocks, LBLFactors):
        blocks = blocks.blocks
    rotations: list[np.ndarray] = []
    values: list[float] = []
    for block in blocks:
        block = np.asarray(block, dtype=float)
        if block.shape == (1, 1):
            rotations.append(np.array([[1.0]]))
            values.append(block[0, 0])
        elif block.shape == (2, 2):
            rotation, pair = _eigen_2x2(block)
            rotations.append(rotation)
            values.extend(pair)
        else:
            raise ValueError(f"blocks must be 1x1 or 2x2, got {block.shape}")
    return BlockEigen(rotations=tuple(rotations), values=np.array(values))


def solve(factors: LBLFactors, rhs, flops: FlopCounter | None = None) -> np.ndarray:
    """Solve A x = rhs through the factored form; the middle factor must be PD."""
    rhs = np.asarray(rhs, dtype=float)
    p = factors.dim
    if rhs.shape != (p,):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({p},)")
    eig = block_eigen(factors.blocks)
    if np.any(eig.values <= 0.0):
        raise ValueError(
            "middle factor has a nonpositive eigenvalue; precondition before solving"
        )
    y = solve_triangular(factors.lower, rhs[factors.perm], lower=True, unit_diagonal=True)
    start = 0
    for rot in eig.rotations:
        m = rot.shape[0]
        seg = slice(start, start + m)
        y[seg] = rot @ ((rot.T @ y[seg]) / eig.values[seg])
        start += m
    y = solve_triangular(factors.lower.T, y, lower=False, unit_diagonal=True)
    if flops is not None:
        flops.add(2 * p * (p - 1) + 10 * p, phase="solve")
    out = np.empty(p)
    out[factors.perm] = y
    return out


def reconstruct(factors: LBLFactors) -> np.ndarray:
    """Dense represented matrix P' L B L' P; for diagnostics and tests."""
    p = factors.dim
    middle = np.zeros((p, p))
    start = 0
    for block in factors.blocks:
        m = block.shape[0]
        middle[start : start + m, start : start + m] = block
        start += m
    product = factors.lower @ middle @ factors.lower.T
    out = np.empty((p, p))
    out[np.ix_(factors.perm, factors.perm)] = product
    return 0.5 * (out + out.T)


def inertia(factors: LBLFactors) -> tuple[int, int, int]:
    """Counts of (positive, negative, zero) eigenvalues of the represented matrix."""
    values = block_eigen(factors.blocks).values
    pos = int(np.sum(values > 0.0))
    neg = int(np.sum(values < 0.0))
    return pos, neg, factors.dim - pos - neg
