"""Geometry of the compact Stiefel manifold St(n, r) under the canonical metric.

Points are n x r matrices with orthonormal columns; tangent vectors at U are
n x r matrices D with U'D skew-symmetric.  The canonical metric is
``<D, E>_U = tr(D' (I - U U'/2) E)``, the geodesics are the closed-form
matrix-exponential curves, and the logarithm is computed by the iterative
algorithm that repeatedly rotates an orthogonal 2r x 2r completion until its
matrix logarithm has the tangent block structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import PreconditionError, ShapeError, StiefelLogError

# Tolerances used when validating constructed points / tangent vectors.
ORTH_TOL = 1e-10
TANGENT_TOL = 1e-8

DEFAULT_LOG_TAU = 1e-14
DEFAULT_LOG_MAX_ITER = 100


@dataclass
class OpCounter:
    """Counts Riemannian exp/log evaluations (process-global, not thread-safe)."""

    exp_calls: int = 0
    log_calls: int = 0

    def reset(self) -> None:
        self.exp_calls = 0
        self.log_calls = 0


#: Instrumentation for cost accounting: every `stiefel_exp` / `stiefel_log`
#: call increments these counters.
op_counter = OpCounter()


@dataclass(frozen=True)
class StiefelPoint:
    """A point on St(n, r): an n x r matrix with orthonormal columns."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 2 or u.shape[0] < u.shape[1]:
            raise ShapeError(f"Stiefel point needs an n x r matrix with n >= r, got {u.shape}")
        if not np.all(np.isfinite(u)):
            raise PreconditionError("Stiefel point has non-finite entries")
        err = np.linalg.norm(u.T @ u - np.eye(u.shape[1]))
        if err > ORTH_TOL:
            raise PreconditionError(
                f"columns are not orthonormal (||U'U - I||_F = {err:.3g})"
            )
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def r(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector at ``base``: U'delta must be skew-symmetric."""

    base: StiefelPoint
    delta: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=float)
        if d.shape != self.base.u.shape:
            raise ShapeError(
                f"tangent vector shape {d.shape} != base shape {self.base.u.shape}"
            )
        ud = self.base.u.T @ d
        err = np.linalg.norm(ud + ud.T)
        if err > TANGENT_TOL * max(1.0, np.linalg.norm(d)):
            raise PreconditionError(
                f"not tangent at base (||U'D + D'U||_F = {err:.3g}); "
                "use project_tangent for raw matrices"
            )
        object.__setattr__(self, "delta", d)

    # Tangent vectors at a common base point form a vector space; these
    # operators keep the interpolation code close to the formulas.
    def _require_same_base(self, other: "TangentVector") -> None:
        if self.base is not other.base and not np.array_equal(self.base.u, other.base.u):
            raise PreconditionError("tangent vectors have different base points")

    def __add__(self, other: "TangentVector") -> "TangentVector":
        self._require_same_base(other)
        return TangentVector(self.base, self.delta + other.delta)

    def __sub__(self, other: "TangentVector") -> "TangentVector":
        self._require_same_base(other)
        return TangentVector(self.base, self.delta - other.delta)

    def __neg__(self) -> "TangentVector":
        return TangentVector(self.base, -self.delta)

    def __mul__(self, scalar: float) -> "TangentVector":
        return TangentVector(self.base, float(scalar) * self.delta)

    __rmul__ = __mul__


@dataclass(frozen=True)
class HorizontalSplit:
    """Decomposition delta = U a + q r_factor of a tangent vector.

    ``a = U'delta`` is skew; ``q``/``r_factor`` come from the QR of the
    normal component (I - U U') delta.
    """

    a: np.ndarray
    q: np.ndarray
    r_factor: np.ndarray


def project_tangent(base: StiefelPoint, x) -> TangentVector:
    """Orthogonal projection of an ambient n x r matrix onto the tangent space."""
    mat = np.asarray(x, dtype=float)
    if mat.shape != base.u.shape:
        raise ShapeError(f"cannot project shape {mat.shape} at base {base.u.shape}")
    ux = base.u.T @ mat
    sym = 0.5 * (ux + ux.T)
    return TangentVector(base, mat - base.u @ sym)


def metric(xi: TangentVector, eta: TangentVector) -> float:
    """Canonical inner product tr(xi' (I - U U'/2) eta)."""
    xi._require_same_base(eta)
    u = xi.base.u
    full = float(np.sum(xi.delta * eta.delta))
    vertical = float(np.sum((u.T @ xi.delta) * (u.T @ eta.delta)))
    return full - 0.5 * vertical


def norm(xi: TangentVector) -> float:
    """Canonical norm sqrt(metric(xi, xi))."""
    return float(np.sqrt(max(metric(xi, xi), 0.0)))


def _split_deficient(u: np.ndarray, normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """QR of a rank-deficient normal component.

    Modified Gram-Schmidt, zeroing the R-rows of columns that vanish and
    filling the matching Q-columns deterministically from the orthogonal
    complement of [U, kept columns].  The filled columns never contribute to
    reconstructions because their R-rows are zero.
    """
    n, r = normal.shape
    tol = linalg.RANK_EPS * np.linalg.norm(normal)
    q = np.zeros((n, r))
    rmat = np.zeros((r, r))
    kept: list[int] = []
    for j in range(r):
        v = normal[:, j].copy()
        for _ in range(2):
            for i in kept:
                coeff = q[:, i] @ v
                v = v - coeff * q[:, i]
                rmat[i, j] += coeff
        nrm = np.linalg.norm(v)
        if nrm > tol:
            q[:, j] = v / nrm
            rmat[j, j] = nrm
            kept.append(j)
        # else: row j of rmat stays zero; Q column filled below
    missing = [j for j in range(r) if j not in kept]
    if missing:
        anchor = np.hstack([u, q[:, kept]])
        if n - anchor.shape[1] < len(missing):
            # n < 2r leaves no room orthogonal to both U and the kept
            # columns; fillers only need to keep Q orthonormal (their
            # R-rows are zero, so they never enter reconstructions).
            anchor = q[:, kept]
        fillers = linalg.orth_complete(anchor, num=len(missing))
        for pos, j in enumerate(missing):
            q[:, j] = fillers[:, pos]
    return q, rmat


def split_tangent(xi: TangentVector) -> HorizontalSplit:
    """Split delta into U a + q r_factor with a = U'delta skew."""
    u = xi.base.u
    a = u.T @ xi.delta
    normal = xi.delta - u @ a
    qr = linalg.qr_econ(normal)
    if not qr.rank_deficient:
        return HorizontalSplit(a=a, q=qr.q, r_factor=qr.r_factor)
    q, rmat = _split_deficient(u, normal)
    return HorizontalSplit(a=a, q=q, r_factor=rmat)


def _exp_generator(split: HorizontalSplit) -> np.ndarray:
    """The 2r x 2r skew generator [[A, -R'], [R, 0]] of the geodesic."""
    r = split.a.shape[0]
    gen = np.zeros((2 * r, 2 * r))
    gen[:r, :r] = split.a
    gen[:r, r:] = -split.r_factor.T
    gen[r:, :r] = split.r_factor
    return gen


def stiefel_exp(xi: TangentVector, t: float = 1.0) -> StiefelPoint:
    """Riemannian exponential: endpoint at time t of the geodesic with velocity xi.

    Uses the closed form (U, Q) expm(t [[A, -R'], [R, 0]]) [I; 0] built from
    the horizontal split of the velocity.
    """
    op_counter.exp_calls += 1
    split = split_tangent(xi)
    r = xi.base.r
    e = linalg.expm(float(t) * _exp_generator(split))
    u_new = xi.base.u @ e[:r, :r] + split.q @ e[r:, :r]
    return StiefelPoint(u_new)


def stiefel_log(
    base: StiefelPoint,
    target: StiefelPoint,
    tau: float = DEFAULT_LOG_TAU,
    max_iter: int = DEFAULT_LOG_MAX_ITER,
) -> TangentVector:
    """Riemannian logarithm: the tangent vector xi with Exp_base(xi) = target.

    Iterative algorithm: build an orthogonal 2r x 2r completion V of the
    overlap/normal coordinates of ``target``, then repeatedly replace
    V <- V diag(I, expm(-C)) where C is the lower-right block of logm(V),
    until ||C||_F <= tau.  The tangent vector is read off the converged log.

    Raises
    ------
    StiefelLogError
        If the iteration does not reach the threshold within ``max_iter``
        steps, or an intermediate principal logarithm is undefined; this is
        the operational "target too far from base" boundary.
    """
    op_counter.log_calls += 1
    if tau <= 0.0:
        raise PreconditionError(f"tau must be positive, got {tau}")
    if base.u.shape != target.u.shape:
        raise ShapeError(
            f"base shape {base.u.shape} != target shape {target.u.shape}"
        )
    r = base.r
    overlap = base.u.T @ target.u
    normal = target.u - base.u @ overlap
    qr = linalg.qr_econ(normal)
    q, nfac = qr.q, qr.r_factor
    top = np.vstack([overlap, nfac])
    v = np.hstack([top, linalg.orth_complete(top)])
    if np.linalg.det(v) < 0.0:
        # Principal log of the completion needs det +1; the completion
        # columns are free up to sign.
        v = v.copy()
        v[:, -1] *= -1.0
    residual = np.inf
    for k in range(max_iter):
        try:
            log_v = linalg.logm(v)
        except ValueError as exc:
            raise StiefelLogError(
                f"principal log undefined at iteration {k}: {exc}",
                iterations=k,
                residual=residual,
            ) from exc
        a = log_v[:r, :r]
        b = log_v[r:, :r]
        c = log_v[r:, r:]
        residual = float(np.linalg.norm(c))
        if residual <= tau:
            return TangentVector(base, base.u @ a + q @ b)
        v = v.copy()
        v[:, r:] = v[:, r:] @ linalg.expm(-c)
    raise StiefelLogError(
        f"no convergence after {max_iter} iterations (||C||_F = {residual:.3g}); "
        "target may be too far from base",
        iterations=max_iter,
        residual=residual,
    )


def dist(p: StiefelPoint, q: StiefelPoint, tau: float = DEFAULT_LOG_TAU) -> float:
    """Riemannian distance: canonical norm of the logarithm."""
    if np.array_equal(p.u, q.u):
        return 0.0
    return norm(stiefel_log(p, q, tau=tau))


def random_point(rng: np.random.Generator, n: int, r: int) -> StiefelPoint:
    """Random Stiefel point: Q-factor of a Gaussian n x r matrix."""
    return StiefelPoint(linalg.qr_econ(rng.standard_normal((n, r))).q)


def random_tangent(
    rng: np.random.Generator, base: StiefelPoint, scale: float = 1.0
) -> TangentVector:
    """Random tangent vector at ``base`` with canonical norm ``scale``."""
    raw = project_tangent(base, rng.standard_normal(base.u.shape))
    nrm = norm(raw)
    if nrm == 0.0:
        raise PreconditionError("degenerate random tangent draw")
    return (scale / nrm) * raw
