"""Differentials of matrix factorizations and of the Stiefel exponential.

Contains the pieces needed to move Hermite velocity data between tangent
spaces: derivative propagation through QR and (truncated) SVD factorizations,
the directional derivative of the matrix exponential via the block-triangular
exponential identity, the resulting closed form for the differential of the
Stiefel exponential, and the central-difference transport of a sampled
velocity into another tangent space together with its reconstruction check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import linalg, stiefel
from .errors import DomainError, PreconditionError, ShapeError, StiefelLogError, VelocityTransportError

#: Step size for the velocity-transport central difference.
DEFAULT_FD_STEP = 1e-4

#: Relative gap below which singular values count as repeated.
SVD_GAP_EPS = 1e-8

#: First-order curves usable for transporting velocities.
TRANSPORT_CURVES = ("geodesic", "cayley", "polar_retraction", "qr_retraction")


@dataclass(frozen=True)
class QRDerivative:
    """Derivatives (q_dot, r_dot) of the QR factors along a matrix path."""

    q_dot: np.ndarray
    r_dot: np.ndarray


@dataclass(frozen=True)
class SVDDerivative:
    """Derivatives of SVD factors; sigma_dot holds the diagonal only."""

    u_dot: np.ndarray
    sigma_dot: np.ndarray
    v_dot: np.ndarray


@dataclass(frozen=True)
class BlockExpResult:
    """Blocks of expm([[M, Mdot], [0, M]]).

    ``exp_m`` and ``exp_m_repeat`` are the two diagonal blocks (equal up to
    roundoff, both expm(M)); ``dexp_block`` is the upper-right block, the
    directional derivative of expm at M in direction Mdot.
    """

    exp_m: np.ndarray
    dexp_block: np.ndarray
    exp_m_repeat: np.ndarray


def diff_qr(t, t_dot, qr: linalg.EconQR) -> QRDerivative:
    """Differentiate the economy QR factorization along a path.

    Given T = Q R (full column rank) and the path derivative Tdot, returns
    (Qdot, Rdot) with Tdot = Qdot R + Q Rdot and Q'Qdot skew.  The key step
    recovers X = Q'Qdot from the strictly lower triangle of Q'Tdot R^{-1}.
    """
    tmat = np.asarray(t, dtype=float)
    tdot = np.asarray(t_dot, dtype=float)
    q, rfac = qr.q, qr.r_factor
    if tmat.shape != tdot.shape or tmat.shape != q.shape:
        raise ShapeError(
            f"inconsistent shapes: t {tmat.shape}, t_dot {tdot.shape}, q {q.shape}"
        )
    diag = np.abs(np.diagonal(rfac))
    if np.min(diag) <= linalg.RANK_EPS * max(1.0, np.linalg.norm(rfac)):
        raise DomainError("diff_qr: R factor is numerically singular")
    # W = Tdot R^{-1}
    w = sla.solve_triangular(rfac.T, tdot.T, lower=True).T
    b = q.T @ w
    lower = np.tril(b, k=-1)
    x = lower - lower.T
    r_dot = q.T @ tdot - x @ rfac
    q_dot = w - q @ b + q @ x
    return QRDerivative(q_dot=q_dot, r_dot=r_dot)


def _check_distinct(sigma: np.ndarray, what: str) -> None:
    smax = float(sigma[0]) if sigma.size else 0.0
    if smax <= 0.0:
        raise DomainError(f"{what}: largest singular value is not positive")
    if np.min(sigma) <= 1e-13 * smax:
        raise DomainError(f"{what}: zero (or numerically zero) singular value")
    gaps = sigma[:-1] - sigma[1:]
    if sigma.size > 1 and np.min(gaps) < SVD_GAP_EPS * smax:
        raise DomainError(
            f"{what}: repeated or near-repeated singular values "
            f"(min gap {np.min(gaps):.3g}, smax {smax:.3g})"
        )


def diff_svd(y, y_dot, svd: tuple[np.ndarray, np.ndarray, np.ndarray]) -> SVDDerivative:
    """Differentiate a full (economy) SVD y = u diag(sigma) v'.

    Valid only for mutually distinct, positive singular values; the right
    factor rotates by v_dot = v G where G is skew with
    ``G_ij = (s_i p_ij + s_j p_ji) / (s_j^2 - s_i^2)`` and p = u' y_dot v.
    """
    u, sigma, v = svd
    ydot = np.asarray(y_dot, dtype=float)
    m = sigma.shape[0]
    if ydot.shape != u.shape or v.shape != (m, m):
        raise ShapeError("diff_svd: factor shapes inconsistent with y_dot")
    _check_distinct(sigma, "diff_svd")
    p = u.T @ ydot @ v
    sigma_dot = np.diagonal(p).copy()
    denom = sigma[np.newaxis, :] ** 2 - sigma[:, np.newaxis] ** 2
    np.fill_diagonal(denom, 1.0)
    gamma = (sigma[:, np.newaxis] * p + sigma[np.newaxis, :] * p.T) / denom
    np.fill_diagonal(gamma, 0.0)
    v_dot = v @ gamma
    u_dot = (ydot @ v + u @ (sigma[:, np.newaxis] * gamma - np.diag(sigma_dot))) / sigma[np.newaxis, :]
    return SVDDerivative(u_dot=u_dot, sigma_dot=sigma_dot, v_dot=v_dot)


def diff_svd_truncated(
    y, y_dot, rank: int, svd: tuple[np.ndarray, np.ndarray, np.ndarray]
) -> SVDDerivative:
    """Differentiate the rank-r truncated SVD of an exactly rank-r matrix.

    ``svd`` must carry the full square right factor v (m x m): the rotation
    of the leading right singular vectors has components along all of its
    columns.  Rows of the rotation beyond the rank use the exact-rank
    shortcut ``G_ij = p_ji / s_j`` which needs no trailing singular values.
    For rank == m this reduces to ``diff_svd``.
    """
    u, sigma, v = svd
    ydot = np.asarray(y_dot, dtype=float)
    m = v.shape[0]
    r = int(rank)
    if r < 1 or r > m:
        raise ShapeError(f"rank {rank} out of range for m = {m}")
    if v.shape != (m, m):
        raise ShapeError("diff_svd_truncated needs the full square right factor")
    u_r = u[:, :r]
    s_r = sigma[:r]
    _check_distinct(s_r, "diff_svd_truncated")
    p = u_r.T @ ydot @ v  # p[i, j] = u_i' y_dot v_j, i < r, j < m
    p_top = p[:, :r]
    sigma_dot = np.diagonal(p_top).copy()
    denom = s_r[np.newaxis, :] ** 2 - s_r[:, np.newaxis] ** 2
    np.fill_diagonal(denom, 1.0)
    gamma_top = (s_r[:, np.newaxis] * p_top + s_r[np.newaxis, :] * p_top.T) / denom
    np.fill_diagonal(gamma_top, 0.0)
    gamma = np.zeros((m, r))
    gamma[:r, :] = gamma_top
    if r < m:
        gamma[r:, :] = p[:, r:].T / s_r[np.newaxis, :]
    v_dot = v @ gamma
    u_dot = (ydot @ v[:, :r] + u_r @ (s_r[:, np.newaxis] * gamma_top - np.diag(sigma_dot))) / s_r[np.newaxis, :]
    return SVDDerivative(u_dot=u_dot, sigma_dot=sigma_dot, v_dot=v_dot)


def svd_sign_normalize(u_t, v_t, u_ref) -> tuple[np.ndarray, np.ndarray]:
    """Fix SVD sign ambiguity against a reference left factor.

    Flips the columns of (u_t, v_t) jointly so that diag(u_t' u_ref) is
    entrywise nonnegative.  A zero diagonal entry leaves the sign undefined
    and raises.
    """
    ut = np.asarray(u_t, dtype=float)
    vt = np.asarray(v_t, dtype=float)
    uref = np.asarray(u_ref, dtype=float)
    if ut.shape[1] != vt.shape[1] or ut.shape != uref.shape:
        raise ShapeError("svd_sign_normalize: column counts disagree")
    d = np.sum(ut * uref, axis=0)
    if np.any(d == 0.0):
        ties = np.where(d == 0.0)[0]
        raise DomainError(f"sign normalization tie for columns {ties.tolist()}")
    s = np.sign(d)
    return ut * s[np.newaxis, :], vt * s[np.newaxis, :]


def mathias_dexp(m, m_dot) -> BlockExpResult:
    """expm and its directional derivative from one block-triangular expm.

    expm([[M, Mdot], [0, M]]) carries expm(M) in both diagonal blocks and
    d/dt expm(M + t Mdot) at t = 0 in the upper-right block.
    """
    mm = np.asarray(m, dtype=float)
    md = np.asarray(m_dot, dtype=float)
    if mm.shape != md.shape or mm.shape[0] != mm.shape[1]:
        raise ShapeError(f"mathias_dexp needs equal square matrices, got {mm.shape}, {md.shape}")
    s = mm.shape[0]
    big = np.zeros((2 * s, 2 * s))
    big[:s, :s] = mm
    big[:s, s:] = md
    big[s:, s:] = mm
    e = linalg.expm(big)
    return BlockExpResult(
        exp_m=e[:s, :s], dexp_block=e[:s, s:], exp_m_repeat=e[s:, s:]
    )


def dexp_stiefel(xi0: stiefel.TangentVector, v: stiefel.TangentVector) -> np.ndarray:
    """Directional derivative of the Stiefel exponential.

    Returns d/dt at t = 0 of Exp_U(xi0 + t v) as an ambient n x r matrix.
    Differentiates the horizontal split (QR path of the normal component)
    and the 2r x 2r matrix exponential, then applies the product rule:
    result = Qdot E21 + U D11 + Q D21 with E = expm(M), D = dexp(M, Mdot).

    The normal component of xi0 must have full column rank (the QR path is
    not differentiable otherwise); the single exception is xi0 = 0, where
    the differential of the exponential is the identity.
    """
    xi0._require_same_base(v)
    if not np.any(xi0.delta):
        return v.delta.copy()
    u = xi0.base.u
    r = xi0.base.r
    a0 = u.T @ xi0.delta
    normal0 = xi0.delta - u @ a0
    qr0 = linalg.qr_econ(normal0)
    if qr0.rank_deficient:
        raise DomainError(
            "dexp_stiefel: normal component of the base velocity is rank-deficient"
        )
    a_dot = u.T @ v.delta
    normal_dot = v.delta - u @ a_dot
    dqr = diff_qr(normal0, normal_dot, qr0)
    gen = np.zeros((2 * r, 2 * r))
    gen[:r, :r] = a0
    gen[:r, r:] = -qr0.r_factor.T
    gen[r:, :r] = qr0.r_factor
    gen_dot = np.zeros((2 * r, 2 * r))
    gen_dot[:r, :r] = a_dot
    gen_dot[:r, r:] = -dqr.r_dot.T
    gen_dot[r:, :r] = dqr.r_dot
    blocks = mathias_dexp(gen, gen_dot)
    e21 = blocks.exp_m[r:, :r]
    d11 = blocks.dexp_block[:r, :r]
    d21 = blocks.dexp_block[r:, :r]
    return dqr.q_dot @ e21 + u @ d11 + qr0.q @ d21


def _first_order_curve(
    p: stiefel.StiefelPoint, v_p: stiefel.TangentVector, s: float, curve: str
) -> stiefel.StiefelPoint:
    """Point at parameter s of a curve through p with velocity v_p.

    All variants agree with the geodesic to first order at s = 0, which is
    all the transport difference quotient needs.
    """
    u = p.u
    r = p.r
    if curve == "geodesic":
        return stiefel.stiefel_exp(v_p, s)
    if curve == "cayley":
        split = stiefel.split_tangent(v_p)
        gen = np.zeros((2 * r, 2 * r))
        gen[:r, :r] = split.a
        gen[:r, r:] = -split.r_factor.T
        gen[r:, :r] = split.r_factor
        eye = np.eye(2 * r)
        cay = np.linalg.solve((eye - 0.5 * s * gen).T, (eye + 0.5 * s * gen).T).T
        return stiefel.StiefelPoint(u @ cay[:r, :r] + split.q @ cay[r:, :r])
    if curve == "polar_retraction":
        lam, phi = np.linalg.eigh(v_p.delta.T @ v_p.delta)
        scale = 1.0 / np.sqrt(1.0 + s * s * lam)
        return stiefel.StiefelPoint((u + s * v_p.delta) @ (phi * scale[np.newaxis, :]) @ phi.T)
    if curve == "qr_retraction":
        return stiefel.StiefelPoint(linalg.qr_econ(u + s * v_p.delta).q)
    raise PreconditionError(f"unknown curve {curve!r}; choose from {TRANSPORT_CURVES}")


def transport_velocity(
    q: stiefel.StiefelPoint,
    p: stiefel.StiefelPoint,
    v_p: stiefel.TangentVector,
    h: float = DEFAULT_FD_STEP,
    curve: str = "geodesic",
    tau: float = stiefel.DEFAULT_LOG_TAU,
) -> stiefel.TangentVector:
    """Carry a velocity sampled at p into the tangent space at q.

    Central difference of the normal-coordinate transition map:
    (Log_q(c(+h)) - Log_q(c(-h))) / (2h), where c is a curve through p with
    velocity v_p.  Second-order accurate in h.
    """
    if h <= 0.0:
        raise PreconditionError(f"h must be positive, got {h}")
    if v_p.base is not p and not np.array_equal(v_p.base.u, p.u):
        raise PreconditionError("v_p is not attached at p")
    logs = []
    for s, side in ((h, "+h"), (-h, "-h")):
        point = _first_order_curve(p, v_p, s, curve)
        try:
            logs.append(stiefel.stiefel_log(q, point, tau=tau))
        except StiefelLogError as exc:
            raise VelocityTransportError(
                f"logarithm failed at the {side} offset point: {exc}", side=side
            ) from exc
    # The difference quotient amplifies the logs' tangency roundoff by 1/(2h);
    # the exact transition-map derivative is tangent at q, so project it off.
    return stiefel.project_tangent(q, (logs[0].delta - logs[1].delta) / (2.0 * h))


def validate_transport(
    q: stiefel.StiefelPoint,
    p: stiefel.StiefelPoint,
    v_p: stiefel.TangentVector,
    h: float = DEFAULT_FD_STEP,
    tau: float = stiefel.DEFAULT_LOG_TAU,
) -> float:
    """Relative reconstruction error of the velocity transport.

    Transports v_p into T_q, pushes it back through the differential of the
    exponential at Log_q(p), and compares with the original velocity in the
    Frobenius norm.
    """
    v_hat = transport_velocity(q, p, v_p, h=h, curve="geodesic", tau=tau)
    delta_p = stiefel.stiefel_log(q, p, tau=tau)
    v_rec = dexp_stiefel(delta_p, v_hat)
    return float(
        np.linalg.norm(v_rec - v_p.delta) / np.linalg.norm(v_p.delta)
    )
