"""Hermite interpolation of Stiefel-valued curves, plus two baselines.

A spline arc between samples (p, v_p) at t0 and (q, v_q) at t1 is built in
normal coordinates at a chosen center: the other endpoint maps through the
logarithm, velocities map through the differential of the logarithm
(approximated by a central difference of the log/exp transition map), and the
cubic Hermite combination of those tangent vectors is pushed back with a
single exponential per evaluation.  Joining arcs over consecutive sample
pairs gives a C^1 composite curve through all samples.

Baselines: piecewise geodesics (no derivative data) and radial-basis-function
interpolation in a single tangent space (inverse multiquadric kernel).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import stiefel
from .calculus import DEFAULT_FD_STEP, transport_velocity
from .errors import (
    ArcFitError,
    DomainError,
    PreconditionError,
    ShapeError,
    StiefelLogError,
    TangentMapError,
    VelocityTransportError,
)

CENTERINGS = ("q", "p")

#: Subintervals shorter than this fraction of the knot span are rejected.
DEGENERATE_SPAN_EPS = 1e-12


def hermite_coeffs(t: float, t0: float, t1: float) -> tuple[float, float, float, float]:
    """Cubic Hermite coefficient polynomials (a0, a1, b0, b1) on [t0, t1].

    Cardinal basis: a0/a1 are 1 at t0/t1 with zero derivatives at both ends;
    b0/b1 have zero values and unit derivative at t0/t1 respectively.
    a0 + a1 == 1 everywhere.
    """
    if not t0 < t1:
        raise DomainError(f"need t0 < t1, got t0={t0}, t1={t1}")
    span = t1 - t0
    u = t - t0
    w = t - t1
    a0 = 1.0 - u * u / span**2 + 2.0 * u * u * w / span**3
    a1 = u * u / span**2 - 2.0 * u * u * w / span**3
    b0 = u - u * u / span + u * u * w / span**2
    b1 = u * u * w / span**2
    return a0, a1, b0, b1


def euclid_hermite(p, q, v0, v1, t: float, t0: float, t1: float) -> np.ndarray:
    """Classical cubic Hermite combination a0 p + a1 q + b0 v0 + b1 v1."""
    a0, a1, b0, b1 = hermite_coeffs(t, t0, t1)
    p, q, v0, v1 = (np.asarray(x, dtype=float) for x in (p, q, v0, v1))
    if not (p.shape == q.shape == v0.shape == v1.shape):
        raise ShapeError("euclid_hermite: data shapes disagree")
    return a0 * p + a1 * q + b0 * v0 + b1 * v1


@dataclass(frozen=True)
class HermiteSample:
    """One sampled datum: parameter value, point, velocity at that point."""

    t: float
    point: stiefel.StiefelPoint
    velocity: stiefel.TangentVector

    def __post_init__(self):
        if self.velocity.base is not self.point and not np.array_equal(
            self.velocity.base.u, self.point.u
        ):
            raise PreconditionError("sample velocity is not attached at the sample point")


@dataclass(frozen=True)
class HermiteArc:
    """Precomputed spline data for one subinterval [t0, t1].

    ``center`` is the sample the normal coordinates are attached to: the
    t1-sample for "q" centering (the default), the t0-sample for "p".
    ``delta_far`` is the log of the far endpoint, ``v_hat_start``/``v_hat_end``
    are the velocity translates multiplying the b0/b1 coefficient polynomials.
    All three tangent vectors live at ``center``.
    """

    t0: float
    t1: float
    center: stiefel.StiefelPoint
    delta_far: stiefel.TangentVector
    v_hat_start: stiefel.TangentVector
    v_hat_end: stiefel.TangentVector
    centering: str


def arc_tangent(arc: HermiteArc, t: float) -> stiefel.TangentVector:
    """Tangent-space interpolant of an arc at parameter t (before the exp)."""
    if t < arc.t0 or t > arc.t1:
        raise DomainError(f"t={t} outside arc [{arc.t0}, {arc.t1}]")
    a0, a1, b0, b1 = hermite_coeffs(t, arc.t0, arc.t1)
    far = a0 if arc.centering == "q" else a1
    return far * arc.delta_far + b0 * arc.v_hat_start + b1 * arc.v_hat_end


def eval_arc(arc: HermiteArc, t: float) -> stiefel.StiefelPoint:
    """Evaluate the arc: one Riemannian exponential."""
    return stiefel.stiefel_exp(arc_tangent(arc, t))


def fit_arc(
    s0: HermiteSample,
    s1: HermiteSample,
    centering: str = "q",
    h: float = DEFAULT_FD_STEP,
    tau: float = stiefel.DEFAULT_LOG_TAU,
) -> HermiteArc:
    """Fit one quasi-cubic arc between two Hermite samples.

    Costs 3 logarithms and 2 exponentials: one log for the far endpoint and
    a central difference (2 logs + 2 exps) for the far velocity; the
    velocity at the center is used as-is.
    """
    if centering not in CENTERINGS:
        raise PreconditionError(f"centering must be one of {CENTERINGS}, got {centering!r}")
    if not s0.t < s1.t:
        raise DomainError(f"need s0.t < s1.t, got {s0.t}, {s1.t}")
    try:
        if centering == "q":
            center = s1.point
            delta_far = stiefel.stiefel_log(center, s0.point, tau=tau)
            v_start = transport_velocity(center, s0.point, s0.velocity, h=h, tau=tau)
            v_end = s1.velocity
        else:
            center = s0.point
            delta_far = stiefel.stiefel_log(center, s1.point, tau=tau)
            v_start = s0.velocity
            v_end = transport_velocity(center, s1.point, s1.velocity, h=h, tau=tau)
    except (StiefelLogError, VelocityTransportError) as exc:
        raise ArcFitError(
            f"arc fit failed on [{s0.t}, {s1.t}]; samples may be too far apart, "
            f"refine the sampling ({exc})",
            t0=s0.t,
            t1=s1.t,
        ) from exc
    return HermiteArc(
        t0=float(s0.t),
        t1=float(s1.t),
        center=center,
        delta_far=delta_far,
        v_hat_start=v_start,
        v_hat_end=v_end,
        centering=centering,
    )


def _segment_index(knots: np.ndarray, t: float) -> int:
    """Right-closed lookup: t in [k_i, k_{i+1}) -> i; t == k_last -> last."""
    if t < knots[0] or t > knots[-1]:
        raise DomainError(f"t={t} outside [{knots[0]}, {knots[-1]}]")
    if t == knots[-1]:
        return len(knots) - 2
    return int(np.searchsorted(knots, t, side="right")) - 1


@dataclass(frozen=True)
class CompositeCurve:
    """Piecewise quasi-cubic curve through a full Hermite sample set."""

    arcs: tuple[HermiteArc, ...]
    knots: np.ndarray

    def arc_index(self, t: float) -> int:
        return _segment_index(self.knots, t)

    def __call__(self, t: float) -> stiefel.StiefelPoint:
        return eval_arc(self.arcs[self.arc_index(t)], t)


def fit_composite(
    samples: list[HermiteSample],
    centering: str = "q",
    h: float = DEFAULT_FD_STEP,
    tau: float = stiefel.DEFAULT_LOG_TAU,
) -> CompositeCurve:
    """Fit arcs over consecutive sample pairs; the result is C^1 at the knots."""
    if len(samples) < 2:
        raise PreconditionError("need at least 2 samples")
    ts = np.asarray([s.t for s in samples], dtype=float)
    if not np.all(np.diff(ts) > 0):
        raise PreconditionError("sample parameters must be strictly increasing")
    span = ts[-1] - ts[0]
    if np.any(np.diff(ts) < DEGENERATE_SPAN_EPS * span):
        raise PreconditionError("degenerate subinterval in the sample plan")
    arcs = tuple(
        fit_arc(samples[i], samples[i + 1], centering=centering, h=h, tau=tau)
        for i in range(len(samples) - 1)
    )
    return CompositeCurve(arcs=arcs, knots=ts)


@dataclass(frozen=True)
class GeodesicCurve:
    """Piecewise-geodesic interpolant (manifold version of linear interpolation)."""

    knots: np.ndarray
    directions: tuple[stiefel.TangentVector, ...]  # Log_{p_i}(p_{i+1})

    def __call__(self, t: float) -> stiefel.StiefelPoint:
        i = _segment_index(self.knots, t)
        s = (t - self.knots[i]) / (self.knots[i + 1] - self.knots[i])
        return stiefel.stiefel_exp(self.directions[i], s)


def geodesic_interp(
    samples: list[tuple[float, stiefel.StiefelPoint]],
    tau: float = stiefel.DEFAULT_LOG_TAU,
) -> GeodesicCurve:
    """Connect consecutive sample points by geodesics."""
    if len(samples) < 2:
        raise PreconditionError("need at least 2 samples")
    ts = np.asarray([t for t, _ in samples], dtype=float)
    if not np.all(np.diff(ts) > 0):
        raise PreconditionError("sample parameters must be strictly increasing")
    directions = []
    for i in range(len(samples) - 1):
        try:
            directions.append(
                stiefel.stiefel_log(samples[i][1], samples[i + 1][1], tau=tau)
            )
        except StiefelLogError as exc:
            raise ArcFitError(
                f"geodesic fit failed on [{ts[i]}, {ts[i + 1]}]: {exc}",
                t0=float(ts[i]),
                t1=float(ts[i + 1]),
            ) from exc
    return GeodesicCurve(knots=ts, directions=tuple(directions))


def _inverse_multiquadric(d: np.ndarray, shape: float) -> np.ndarray:
    return 1.0 / np.sqrt(1.0 + (shape * d) ** 2)


@dataclass(frozen=True)
class TangentRBFCurve:
    """RBF interpolant of log-images in a single tangent space.

    Sample parameters are affinely rescaled to [-1, 1] before the kernel is
    applied, so ``shape`` is interval-independent.  ``failed_indices`` lists
    samples whose logarithm to the center did not converge (only nonempty
    when the curve was fit with ``skip_failed=True``).
    """

    center: stiefel.StiefelPoint
    scaled_knots: np.ndarray
    weights: np.ndarray  # (k, n, r) stacked weight matrices
    shape: float
    t_lo: float
    t_hi: float
    failed_indices: tuple[int, ...] = field(default=())

    def _rescale(self, t: float) -> float:
        return -1.0 + 2.0 * (t - self.t_lo) / (self.t_hi - self.t_lo)

    def __call__(self, t: float) -> stiefel.StiefelPoint:
        phi = _inverse_multiquadric(
            np.abs(self._rescale(t) - self.scaled_knots), self.shape
        )
        delta = np.tensordot(phi, self.weights, axes=1)
        return stiefel.stiefel_exp(stiefel.TangentVector(self.center, delta))


def tangent_rbf_interp(
    samples: list[tuple[float, stiefel.StiefelPoint]],
    shape: float = 1.0,
    tau: float = stiefel.DEFAULT_LOG_TAU,
    skip_failed: bool = False,
) -> TangentRBFCurve:
    """Map all samples to the tangent space of the middle sample, RBF-interpolate.

    The center is the sample with index ``len(samples) // 2``.  If the log of
    some sample does not converge, raises TangentMapError listing the failed
    indices, unless ``skip_failed`` is set, in which case those samples are
    dropped from the interpolation problem and recorded on the curve.
    """
    if not samples:
        raise PreconditionError("need at least 1 sample")
    if shape <= 0.0:
        raise PreconditionError(f"RBF shape parameter must be positive, got {shape}")
    ts = np.asarray([t for t, _ in samples], dtype=float)
    if len(samples) > 1 and not np.all(np.diff(ts) > 0):
        raise PreconditionError("sample parameters must be strictly increasing")
    center = samples[len(samples) // 2][1]
    t_lo, t_hi = float(ts[0]), float(ts[-1])
    if t_hi == t_lo:  # single sample: constant curve
        t_lo, t_hi = t_lo - 0.5, t_hi + 0.5
    deltas: list[np.ndarray] = []
    kept: list[int] = []
    failed: list[int] = []
    for i, (_, point) in enumerate(samples):
        try:
            deltas.append(stiefel.stiefel_log(center, point, tau=tau).delta)
            kept.append(i)
        except StiefelLogError:
            failed.append(i)
    if failed and not skip_failed:
        raise TangentMapError(
            f"tangent-space map failed for samples {failed} "
            "(log did not converge from the center sample)",
            failed_indices=failed,
        )
    if not kept:
        raise TangentMapError("no sample could be mapped to the center tangent space", failed)
    scaled = -1.0 + 2.0 * (ts[kept] - t_lo) / (t_hi - t_lo)
    kernel = _inverse_multiquadric(np.abs(scaled[:, np.newaxis] - scaled[np.newaxis, :]), shape)
    stacked = np.stack(deltas)  # (k, n, r)
    weights = np.linalg.solve(kernel, stacked.reshape(len(kept), -1)).reshape(stacked.shape)
    return TangentRBFCurve(
        center=center,
        scaled_knots=scaled,
        weights=weights,
        shape=float(shape),
        t_lo=t_lo,
        t_hi=t_hi,
        failed_indices=tuple(failed),
    )
