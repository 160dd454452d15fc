"""Dense linear-algebra kernels with fixed conventions.

Everything downstream depends on two conventions established here:

* ``qr_econ`` returns the economy-size QR factorization with a nonnegative
  R-diagonal, which makes the factors a continuous (indeed smooth) function
  of the input on the set of full-column-rank matrices.  Library QR routines
  fix signs arbitrarily and can jump along a smooth matrix path.
* ``logm`` is the principal matrix logarithm, defined only for matrices with
  no eigenvalue on the closed negative real axis.

The heavy lifting is delegated to LAPACK via numpy/scipy; the wrappers add
the conventions, the domain checks, and typed errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, PreconditionError, ShapeError

# R-diagonal entries below RANK_EPS * ||a||_F are treated as zero.
RANK_EPS = 1e-13


def _as_matrix(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be a 2-d array, got ndim={a.ndim}")
    return a


def expm(x) -> np.ndarray:
    """Matrix exponential of a square matrix."""
    a = _as_matrix(x, "x")
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"expm needs a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("expm input has non-finite entries")
    return sla.expm(a)


def logm(x) -> np.ndarray:
    """Principal matrix logarithm.

    Raises
    ------
    DomainError
        If ``x`` has an eigenvalue on the closed negative real axis, where
        the principal logarithm is not defined.
    """
    a = _as_matrix(x, "x")
    n = a.shape[0]
    if n != a.shape[1]:
        raise ShapeError(f"logm needs a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("logm input has non-finite entries")
    eig = np.linalg.eigvals(a)
    scale = max(np.max(np.abs(eig)), 1.0)
    on_negative_axis = (eig.real <= 0.0) & (np.abs(eig.imag) <= 1e-14 * scale)
    if np.any(on_negative_axis):
        bad = eig[on_negative_axis][0]
        raise DomainError(
            f"logm: eigenvalue {bad:.6g} lies on the closed negative real axis"
        )
    out = sla.logm(a)
    if np.iscomplexobj(out):
        imag = np.max(np.abs(out.imag))
        if imag > 1e-10 * max(1.0, np.max(np.abs(out.real))):
            raise DomainError(
                f"logm: result has non-negligible imaginary part ({imag:.3g})"
            )
        out = out.real.copy()
    if not np.all(np.isfinite(out)):
        raise DomainError("logm did not produce a finite result")
    return out


@dataclass(frozen=True)
class EconQR:
    """Economy-size QR factors with nonnegative R-diagonal.

    ``deficient_cols`` lists columns whose R-diagonal entry is below
    ``RANK_EPS * ||a||_F``; callers decide how to handle them.
    """

    q: np.ndarray
    r_factor: np.ndarray
    deficient_cols: tuple[int, ...] = ()

    @property
    def rank_deficient(self) -> bool:
        return len(self.deficient_cols) > 0


def qr_econ(a) -> EconQR:
    """Economy-size QR with deterministic signs (R-diagonal >= 0).

    For full-column-rank input this is the unique QR factorization with a
    positive R-diagonal, hence continuous along full-rank matrix paths.
    Rank deficiency is flagged on the result, not raised.
    """
    mat = _as_matrix(a, "a")
    n, r = mat.shape
    if n < r:
        raise ShapeError(f"qr_econ needs n >= r, got {mat.shape}")
    q, rf = np.linalg.qr(mat, mode="reduced")
    diag = np.diagonal(rf).copy()
    flip = diag < 0.0
    if np.any(flip):
        signs = np.where(flip, -1.0, 1.0)
        q = q * signs[np.newaxis, :]
        rf = rf * signs[:, np.newaxis]
    threshold = RANK_EPS * np.linalg.norm(mat)
    deficient = tuple(int(j) for j in np.where(np.abs(np.diagonal(rf)) <= threshold)[0])
    return EconQR(q=q, r_factor=rf, deficient_cols=deficient)


def svd_full(y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD ``y = u @ diag(sigma) @ v.T`` with square orthogonal ``v``.

    Requires n >= m; returns ``u`` with n x m orthonormal columns, the
    singular values in descending order, and the full m x m right factor
    (needed by the truncated-SVD differentiation downstream).
    """
    mat = _as_matrix(y, "y")
    n, m = mat.shape
    if n < m:
        raise ShapeError(f"svd_full needs n >= m, got {mat.shape}")
    u, sigma, vh = np.linalg.svd(mat, full_matrices=False)
    return u, sigma, vh.T.copy()


def orth_complete(v_r, num: int | None = None) -> np.ndarray:
    """Orthonormal completion of a matrix with orthonormal columns.

    Runs modified Gram-Schmidt over the canonical basis vectors in index
    order, which is deterministic.  Candidates whose residual against the
    current basis falls below 1/(2*sqrt(m)) are skipped; that threshold is
    small enough that a full completion always exists among the canonical
    basis vectors.

    Parameters
    ----------
    v_r : (m, r) array with orthonormal columns.
    num : number of completion columns to return (default: all m - r).
    """
    v = _as_matrix(v_r, "v_r")
    m, r = v.shape
    if r > m:
        raise ShapeError(f"orth_complete needs m >= r, got {v.shape}")
    gram_err = np.linalg.norm(v.T @ v - np.eye(r))
    if gram_err > 1e-10:
        raise PreconditionError(
            f"orth_complete input is not orthonormal (||V'V - I|| = {gram_err:.3g})"
        )
    want = m - r if num is None else int(num)
    if want < 0 or want > m - r:
        raise ShapeError(f"cannot produce {num} completion columns from shape {v.shape}")
    threshold = 0.5 / np.sqrt(m)
    cols: list[np.ndarray] = []
    for i in range(m):
        if len(cols) == want:
            break
        cand = np.zeros(m)
        cand[i] = 1.0
        for _ in range(2):  # MGS with one re-orthogonalization pass
            cand = cand - v @ (v.T @ cand)
            for c in cols:
                cand = cand - c * (c @ cand)
        nrm = np.linalg.norm(cand)
        if nrm > threshold:
            cols.append(cand / nrm)
    if len(cols) < want:
        # Cannot happen for orthonormal input (trace argument bounds the
        # number of rejectable candidates), but fail loudly rather than
        # return a short basis.
        raise PreconditionError("orth_complete could not build a full completion")
    return np.column_stack(cols) if cols else np.zeros((m, 0))
