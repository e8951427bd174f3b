"""Dense matrix kernels: a deterministic Jacobi SVD oracle and the randomized
truncated SVD used for dimensionality reduction.

Matrices are plain 2-D float64 numpy arrays (row-major). Every operation is a
pure function of its inputs; nothing here mutates its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NumericError
from .ingest import DatasetTable

# Desk-scale cap for the Jacobi oracle; it exists to verify the randomized
# path, not to factor production matrices.
ORACLE_MAX_DIM = 512

_JACOBI_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 100
_RANK_TOL = 1e-12


def _as_matrix(a, name: str) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise NumericError(f"{name} contains non-finite entries")
    return m


@dataclass(frozen=True)
class SvdFactors:
    """Rank-k factorization A ~ U @ diag(S) @ V.T with S sorted descending."""

    u: np.ndarray  # m x k
    s: np.ndarray  # k
    v: np.ndarray  # n x k
    k: int

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


@dataclass(frozen=True)
class RsvdConfig:
    """Knobs for the randomized factorization.

    k is the target rank, p the oversampling width (the sketch has k + p
    columns), q the number of power-iteration rounds, seed drives the
    Gaussian test matrix.
    """

    k: int
    p: int = 10
    q: int = 2
    seed: int = 42

    def validate(self, m: int, n: int) -> None:
        if self.k < 1:
            raise ValueError(f"rank k must be >= 1, got {self.k}")
        if self.p < 0:
            raise ValueError(f"oversampling p must be >= 0, got {self.p}")
        if self.q < 0:
            raise ValueError(f"power exponent q must be >= 0, got {self.q}")
        if self.k + self.p > min(m, n):
            raise ValueError(
                f"k + p = {self.k + self.p} exceeds min(m, n) = {min(m, n)}"
            )


def matmul(a, b) -> np.ndarray:
    """Validated matrix product."""
    am = _as_matrix(a, "A")
    bm = _as_matrix(b, "B")
    if am.shape[1] != bm.shape[0]:
        raise ValueError(
            f"dimension mismatch: {am.shape[0]}x{am.shape[1]} times "
            f"{bm.shape[0]}x{bm.shape[1]}"
        )
    out = am @ bm
    if not np.all(np.isfinite(out)):
        raise NumericError("matmul produced non-finite entries")
    return out


def orthonormal_basis(y) -> np.ndarray:
    """Orthonormal basis for the column span of y.

    Modified Gram-Schmidt with a second re-orthogonalization pass; columns
    that are (numerically) dependent on earlier ones are dropped, so the
    result may have fewer columns than y.
    """
    ym = _as_matrix(y, "Y")
    m, n = ym.shape
    if n < 1:
        raise ValueError("Y must have at least one column")
    if m < n:
        raise ValueError(f"Y must be tall or square, got {m}x{n}")
    col_norms = np.linalg.norm(ym, axis=0)
    scale = float(col_norms.max())
    if scale == 0.0:
        raise ValueError("rank zero: Y is the zero matrix")

    basis: list[np.ndarray] = []
    for j in range(n):
        v = ym[:, j].copy()
        for _ in range(2):  # twice is enough for near-dependent columns
            for q in basis:
                v -= (q @ v) * q
        nv = float(np.linalg.norm(v))
        if nv > _RANK_TOL * scale:
            basis.append(v / nv)
    return np.column_stack(basis)


def _complete_orthonormal(cols: list[np.ndarray], m: int, extra: int) -> list[np.ndarray]:
    """Extend an orthonormal list with `extra` further orthonormal vectors,
    greedily picking the standard basis vector with the largest residual."""
    out = list(cols)
    for _ in range(extra):
        best = None
        best_norm = 0.0
        for e in range(m):
            v = np.zeros(m)
            v[e] = 1.0
            for q in out:
                v -= (q @ v) * q
            nv = float(np.linalg.norm(v))
            if nv > best_norm:
                best, best_norm = v / nv, nv
        if best is None or best_norm < 1e-8:
            raise NumericError("could not complete orthonormal basis")
        out.append(best)
    return out


def svd_oracle(a) -> SvdFactors:
    """Full SVD of a small dense matrix by one-sided Jacobi rotations.

    Deterministic reference used to verify the randomized factorization.
    Rotations are applied to column pairs until every pair is orthogonal to
    machine-level tolerance; singular values are the converged column norms.
    """
    am = _as_matrix(a, "A")
    m, n = am.shape
    if min(m, n) > ORACLE_MAX_DIM:
        raise ValueError(
            f"svd_oracle caps min(m, n) at {ORACLE_MAX_DIM}, got {min(m, n)}"
        )
    if m < n:
        f = svd_oracle(am.T)
        return SvdFactors(u=f.v, s=f.s, v=f.u, k=f.k)

    b = am.copy()
    v = np.eye(n)
    for _ in range(_JACOBI_MAX_SWEEPS):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                bi = b[:, i]
                bj = b[:, j]
                alpha = float(bi @ bi)
                beta = float(bj @ bj)
                gamma = float(bi @ bj)
                if alpha == 0.0 or beta == 0.0:
                    continue
                if abs(gamma) <= _JACOBI_TOL * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta == 0.0:  # equal norms: rotate by 45 degrees
                    t = 1.0
                else:
                    t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = cs * t
                b[:, i], b[:, j] = cs * bi - sn * bj, sn * bi + cs * bj
                vi, vj = v[:, i].copy(), v[:, j].copy()
                v[:, i] = cs * vi - sn * vj
                v[:, j] = sn * vi + cs * vj
        if not rotated:
            break
    else:
        raise NumericError("Jacobi sweep limit exceeded without convergence")

    norms = np.linalg.norm(b, axis=0)
    zero_tol = float(norms.max()) * np.finfo(np.float64).eps * max(m, n)
    s = np.where(norms > zero_tol, norms, 0.0)
    u = np.zeros((m, n))
    live = [j for j in range(n) if s[j] > 0.0]
    dead = [j for j in range(n) if s[j] == 0.0]
    for j in live:
        u[:, j] = b[:, j] / s[j]
    if dead:
        # zero singular values still need orthonormal U columns
        completed = _complete_orthonormal([u[:, j] for j in live], m, len(dead))
        for j, col in zip(dead, completed[len(live):]):
            u[:, j] = col

    order = np.argsort(-s, kind="stable")  # stable: ties keep iteration order
    return SvdFactors(u=u[:, order], s=s[order], v=v[:, order], k=n)


def randomized_svd(a, cfg: RsvdConfig) -> SvdFactors:
    """Rank-k truncated SVD via a Gaussian range sketch.

    Draws an n x (k+p) standard-normal test matrix from the seeded generator,
    captures the range of A, sharpens it with q power-iteration rounds
    (re-orthonormalizing after every application of A and A.T, the numerically
    stable form of multiplying by (A A.T)^q), factors the small projected
    matrix with the Jacobi oracle, and keeps the leading k triples.
    """
    am = _as_matrix(a, "A")
    m, n = am.shape
    cfg.validate(m, n)
    ell = cfg.k + cfg.p

    rng = np.random.default_rng(cfg.seed)
    omega = rng.standard_normal((n, ell))
    q_mat = orthonormal_basis(am @ omega)
    for _ in range(cfg.q):
        z = orthonormal_basis(am.T @ q_mat)
        q_mat = orthonormal_basis(am @ z)

    small = q_mat.T @ am  # ell' x n with ell' <= ell small by construction
    f = svd_oracle(small)
    u_full = q_mat @ f.u

    k = cfg.k
    avail = f.s.shape[0]
    if avail >= k:
        return SvdFactors(u=u_full[:, :k], s=f.s[:k].copy(), v=f.v[:, :k], k=k)

    # Rank-deficient input: pad with orthonormal completions and zero values.
    u_cols = _complete_orthonormal([u_full[:, j] for j in range(avail)], m, k - avail)
    v_cols = _complete_orthonormal([f.v[:, j] for j in range(avail)], n, k - avail)
    s = np.zeros(k)
    s[:avail] = f.s
    return SvdFactors(u=np.column_stack(u_cols), s=s, v=np.column_stack(v_cols), k=k)


def project(table: DatasetTable, factors: SvdFactors) -> DatasetTable:
    """Replace features by their coordinates in the right singular basis."""
    n_cols = table.features.shape[1]
    if factors.v.shape[0] != n_cols:
        raise ValueError(
            f"projection mismatch: V has {factors.v.shape[0]} rows, "
            f"table has {n_cols} columns"
        )
    projected = table.features @ factors.v
    names = tuple(f"svd_{i}" for i in range(factors.v.shape[1]))
    return DatasetTable(features=projected, feature_names=names, labels=table.labels)


def dump_factors(factors: SvdFactors, out_dir) -> list[str]:
    """Debug dump of U, S, V as CSV files; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, arr in (("u", factors.u), ("s", factors.s), ("v", factors.v)):
        path = out / f"{name}.csv"
        np.savetxt(path, np.atleast_2d(arr) if arr.ndim == 1 else arr, delimiter=",")
        paths.append(str(path))
    return paths
