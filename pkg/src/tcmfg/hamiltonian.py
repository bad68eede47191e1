"""Gain functions on the control ray and their Legendre-Fenchel conjugates.

A gain function L: [0, inf) -> R u {inf} prices a time-change rate; its
conjugate F(z) = sup_{zeta >= 0} (z zeta - L(zeta)) is the Hamiltonian the
backward equation consumes, and the maximizer zeta* = F'(z) is the optimal
rate. Six closed-form pairs are built in; `conjugate_numeric` evaluates the
sup by brute force for cross-checking any pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import xlogy


class DivergentSupremumError(ValueError):
    """The conjugate sup keeps growing along the extended control grid."""


class NonDifferentiableError(ValueError):
    """The Hamiltonian has a corner; the control is a subdifferential interval."""


def _dispatch(fn):
    """Evaluate on arrays, unwrap to float for scalar input."""

    def wrapped(z):
        out = fn(np.asarray(z, dtype=float))
        return float(out) if np.ndim(z) == 0 else out

    return wrapped


@dataclass(frozen=True)
class GainFunction:
    """Lower-semicontinuous convex cost of a control rate, +inf off its domain.

    `special_points` are rates any sup-grid must contain (domain endpoints,
    indicator atoms); `domain_hi` caps grid extension for bounded domains.
    """

    variant: str
    params: dict
    fn: Callable[[np.ndarray], np.ndarray]
    special_points: tuple
    domain_hi: Optional[float]
    convex: bool = True

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        out = np.where(zeta < 0, np.inf, self.fn(np.maximum(zeta, 0.0)))
        return float(out) if np.ndim(zeta) == 0 else out


@dataclass(frozen=True)
class Hamiltonian:
    """Conjugate pair metadata: F, its derivative, and regularity flags.

    `gamma` is the Hoelder exponent of F' on unit windows, `kappa` the
    certified lower bound of F' (positive means nondegenerate control).
    Variants with a corner carry F_prime=None and differentiable=False.
    """

    variant: str
    params: dict
    F: Callable
    F_prime: Optional[Callable]
    gamma: float
    kappa: float
    convex: bool = True
    differentiable: bool = True

    def __call__(self, z):
        return self.F(z)


def _canon(variant: str) -> str:
    return variant.replace("_", "-").strip().lower()


def gain_function(variant: str, **params) -> GainFunction:
    """Build one of the six built-in gain functions.

    Variants: indicator-point(kappa), indicator-interval(kappa),
    regularized-interval(kappa, eps), power(q), entropy,
    shifted(base: GainFunction, kappa).
    """
    v = _canon(variant)
    if v == "indicator-point":
        kappa = float(params["kappa"])
        if kappa < 0:
            raise ValueError("indicator-point needs kappa >= 0")
        return GainFunction(v, {"kappa": kappa},
                            lambda z: np.where(z == kappa, 0.0, np.inf),
                            special_points=(kappa,), domain_hi=kappa)
    if v == "indicator-interval":
        kappa = float(params["kappa"])
        if kappa < 0:
            raise ValueError("indicator-interval needs kappa >= 0")
        return GainFunction(v, {"kappa": kappa},
                            lambda z: np.where(z <= kappa, 0.0, np.inf),
                            special_points=(0.0, kappa), domain_hi=kappa)
    if v == "regularized-interval":
        kappa = float(params["kappa"])
        eps = float(params["eps"])
        if kappa <= 0 or eps <= 0:
            raise ValueError("regularized-interval needs kappa > 0 and eps > 0")
        return GainFunction(
            v, {"kappa": kappa, "eps": eps},
            lambda z: np.where(z <= kappa, eps * (z * z / kappa - z), np.inf),
            special_points=(0.0, kappa), domain_hi=kappa)
    if v == "power":
        q = float(params["q"])
        if q <= 1:
            raise ValueError("power needs q > 1")
        return GainFunction(v, {"q": q}, lambda z: z ** q / q,
                            special_points=(0.0,), domain_hi=None)
    if v == "entropy":
        return GainFunction(v, {}, lambda z: xlogy(z, z) - z,
                            special_points=(0.0,), domain_hi=None)
    if v == "shifted":
        base = params["base"]
        kappa = float(params["kappa"])
        if not isinstance(base, GainFunction):
            raise ValueError("shifted needs base: GainFunction")
        if kappa < 0:
            raise ValueError("shifted needs kappa >= 0")
        hi = None if base.domain_hi is None else base.domain_hi + kappa
        return GainFunction(
            v, {"base": base, "kappa": kappa},
            lambda z: np.where(z >= kappa, base.fn(np.maximum(z - kappa, 0.0)),
                               np.inf),
            special_points=tuple(kappa + s for s in base.special_points),
            domain_hi=hi, convex=base.convex)
    raise ValueError(f"unknown gain variant {variant!r}")


def closed_form(variant: str, **params) -> Hamiltonian:
    """Analytic conjugate of a built-in gain function.

    indicator-point(kappa):       F(z) = kappa z,            F' = kappa
    indicator-interval(kappa):    F(z) = kappa z+,           corner at 0
    regularized-interval(k, eps): quadratic blend on [-eps, eps), then k z
    power(q):                     F(z) = (q-1)/q (z+)^{q/(q-1)},
                                  F'(z) = (z+)^{1/(q-1)}, gamma = 1/(q-1)^
    entropy:                      F(z) = e^z (gamma is local only)
    shifted(base, kappa):         F(z) = F_base(z) + kappa z, F' >= kappa

    ^ clamped into (0, 1].
    """
    v = _canon(variant)
    if v == "indicator-point":
        kappa = float(params["kappa"])
        if kappa < 0:
            raise ValueError("indicator-point needs kappa >= 0")
        return Hamiltonian(v, {"kappa": kappa},
                           F=_dispatch(lambda z: kappa * z),
                           F_prime=_dispatch(lambda z: np.full_like(z, kappa)),
                           gamma=1.0, kappa=kappa)
    if v == "indicator-interval":
        kappa = float(params["kappa"])
        if kappa < 0:
            raise ValueError("indicator-interval needs kappa >= 0")
        return Hamiltonian(v, {"kappa": kappa},
                           F=_dispatch(lambda z: kappa * np.maximum(z, 0.0)),
                           F_prime=None, gamma=1.0, kappa=0.0,
                           differentiable=False)
    if v == "regularized-interval":
        kappa = float(params["kappa"])
        eps = float(params["eps"])
        if kappa <= 0 or eps <= 0:
            raise ValueError("regularized-interval needs kappa > 0 and eps > 0")

        def f(z):
            mid = kappa / (4 * eps) * (z + eps) ** 2
            return np.where(z < -eps, 0.0, np.where(z < eps, mid, kappa * z))

        def fp(z):
            mid = kappa / (2 * eps) * (z + eps)
            return np.where(z < -eps, 0.0, np.where(z < eps, mid, kappa))

        return Hamiltonian(v, {"kappa": kappa, "eps": eps}, F=_dispatch(f),
                           F_prime=_dispatch(fp), gamma=1.0, kappa=0.0)
    if v == "power":
        q = float(params["q"])
        if q <= 1:
            raise ValueError("power needs q > 1")
        p = q / (q - 1)

        # exp/log with a z+ clamp: exact 0 on the degenerate half-line and no
        # NaN from negative bases raised to fractional powers
        def f(z):
            zp = np.maximum(z, 0.0)
            with np.errstate(divide="ignore"):
                return np.where(zp > 0, np.exp(p * np.log(np.where(zp > 0, zp, 1.0))),
                                0.0) * (1 / p)

        def fp(z):
            zp = np.maximum(z, 0.0)
            with np.errstate(divide="ignore"):
                return np.where(zp > 0,
                                np.exp((p - 1) * np.log(np.where(zp > 0, zp, 1.0))),
                                0.0)

        return Hamiltonian(v, {"q": q}, F=_dispatch(f), F_prime=_dispatch(fp),
                           gamma=min(1.0, 1.0 / (q - 1)), kappa=0.0)
    if v == "entropy":
        return Hamiltonian(v, {}, F=_dispatch(np.exp), F_prime=_dispatch(np.exp),
                           gamma=1.0, kappa=0.0)
    if v == "shifted":
        base = params["base"]
        kappa = float(params["kappa"])
        if not isinstance(base, Hamiltonian):
            raise ValueError("shifted needs base: Hamiltonian")
        if kappa < 0:
            raise ValueError("shifted needs kappa >= 0")
        if not base.differentiable:
            raise ValueError("shifted base must be differentiable")
        bF, bFp = base.F, base.F_prime
        return Hamiltonian(
            v, {"base": base, "kappa": kappa},
            F=lambda z: bF(z) + kappa * np.asarray(z, dtype=float)
            if np.ndim(z) else bF(z) + kappa * float(z),
            F_prime=lambda z: bFp(z) + kappa if np.ndim(z) == 0
            else bFp(z) + kappa,
            gamma=base.gamma, kappa=base.kappa + kappa,
            convex=base.convex, differentiable=True)
    raise ValueError(f"unknown Hamiltonian variant {variant!r}")


def conjugate_numeric(L: GainFunction, z: float, zeta_grid=None,
                      max_extent: float = 1e12) -> float:
    """Brute-force sup of z*zeta - L(zeta) over the control ray.

    The grid is extended geometrically while the discrete argmax sits on its
    unbounded edge, then refined locally around the argmax; the result is a
    lower bound of the true conjugate, within a few refinement steps of it.
    Raises DivergentSupremumError when the sup keeps growing past
    `max_extent` (z beyond the recession slope of L).
    """
    z = float(z)
    if zeta_grid is None:
        hi = 8.0 if L.domain_hi is None else L.domain_hi
        pts = np.linspace(0.0, hi, 257)
    else:
        pts = np.asarray(zeta_grid, dtype=float)
    pts = np.unique(np.concatenate([pts, np.asarray(L.special_points)]))
    if L.domain_hi is not None:
        pts = pts[pts <= L.domain_hi]

    def objective(zetas):
        with np.errstate(invalid="ignore"):
            vals = z * zetas - L(zetas)
        return np.where(np.isnan(vals), -np.inf, vals)

    vals = objective(pts)
    # extend while the best point is the outermost finite one
    while L.domain_hi is None:
        i = int(np.argmax(vals))
        if i < len(pts) - 1 or not np.isfinite(vals[i]):
            break
        if pts[-1] >= max_extent:
            raise DivergentSupremumError(
                f"conjugate at z={z} still increasing at zeta={pts[-1]:.3g}")
        ext = np.geomspace(max(pts[-1], 1.0), 2 * max(pts[-1], 1.0), 65)[1:]
        pts = np.concatenate([pts, ext])
        vals = np.concatenate([vals, objective(ext)])

    i = int(np.argmax(vals))
    best = vals[i]
    lo = pts[max(i - 1, 0)]
    hi = pts[min(i + 1, len(pts) - 1)]
    # local zoom: the sup can only increase, so the lower-bound contract holds
    for _ in range(40):
        if hi - lo < 1e-13 * max(1.0, abs(hi)):
            break
        sub = np.linspace(lo, hi, 33)
        sv = objective(sub)
        j = int(np.argmax(sv))
        best = max(best, sv[j])
        lo, hi = sub[max(j - 1, 0)], sub[min(j + 1, len(sub) - 1)]
    return float(max(best, vals[i]))


def optimal_control(H: Hamiltonian, z):
    """Maximizing control rate zeta* = F'(z) of the conjugate sup."""
    if H.F_prime is None:
        kappa = H.params.get("kappa", 0.0)
        raise NonDifferentiableError(
            f"variant {H.variant!r} has no derivative at its corner; the "
            f"maximizers form the subdifferential interval [0, {kappa}] at z=0")
    return H.F_prime(z)
