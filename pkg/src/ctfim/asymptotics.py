"""Late-time decay rates, oscillation frequencies, and the transition singularity.

At late times the string observable behaves as an exponential envelope
exp(-Gamma L T) modulated by an oscillation whose frequency depends on
the parity of L.  The per-site decay rate is the momentum sum

    Gamma = (p / L) sum_{0 < k < pi} (2 - Re eps_k^+)

over one sector grid (both sectors give the same value for odd L; for
even L the leading rate excludes the k = pi/2 mode and the sector
containing it carries the subleading rate Gamma').  The odd-L frequency
is the finite sum theta + p sum_{k in APBC} Im eps_k^+, which converges
to theta sqrt(1 - 1/g^2) for g > 1 and vanishes for g < 1; the even-L
frequency is the L-independent 2 theta sqrt(1 - 1/g^2).

The second derivative of Gamma with respect to g stays finite at any
finite L but diverges as -(sqrt(2)/pi) (g-1)^(-1/2) for g -> 1+ in the
thermodynamic limit, where the momentum integral picks up a branch-cut
boundary term at k = pi/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .core import (
    InvalidParameterError,
    Sector,
    UnsupportedConfigurationError,
    build_grid,
    half_pi_sector,
)
from .spectrum import eps_plus

__all__ = [
    "LateTimeCharacter",
    "decay_rate",
    "decay_rate_inf",
    "frequency_odd",
    "frequency_even",
    "gamma_curvature",
    "late_time_character",
    "phase_offset_odd",
    "scaling_ansatz_check",
]

# g below this is treated as the measurement-only limit in frequency sums
SMALL_G = 1e-12


def decay_rate(g: float, p: float, L: int, sector: Sector | str) -> float:
    """Per-site late-time decay rate (p/L) sum_k (2 - Re eps_k^+).

    The sum runs over the open-interval momenta of the requested sector.
    For odd L both sectors give identical values; for even L the sector
    without k = pi/2 carries the leading rate.
    """
    ks = build_grid(L, sector).values
    return float(p / L * np.sum(2.0 - np.real(eps_plus(g, ks))))


def decay_rate_inf(g: float, p: float = 1.0) -> float:
    """Thermodynamic-limit decay rate p [1 - (1/2pi) int_0^pi Re eps dk]."""

    def integrand(k: float) -> float:
        return float(np.real(eps_plus(g, k)))

    if g > 1.0:
        v1, _ = quad(integrand, 0.0, math.pi / 2, limit=200)
        v2, _ = quad(integrand, math.pi / 2, math.pi, limit=200)
        total = v1 + v2
    else:
        total, _ = quad(integrand, 0.0, math.pi, limit=200, points=[math.pi / 2])
    return float(p * (1.0 - total / (2.0 * math.pi)))


def frequency_odd(g: float, theta: float, L: int) -> float:
    """Late-time oscillation frequency for odd L from the APBC momentum sum.

    omega = |theta + p sum_{k in APBC} Im eps_k^+| with p = theta / g.
    The finite sum vanishes identically for g <= 1 and converges to
    theta sqrt(1 - 1/g^2) for g > 1 as L grows.  At g = 0 the series
    limit of the sum is -2 theta sum_k cos k, which cancels theta exactly
    for odd L.
    """
    if L % 2 == 0:
        raise UnsupportedConfigurationError(f"frequency_odd requires odd L, got {L}")
    ks = build_grid(L, Sector.APBC).values
    if g < SMALL_G:
        # Im eps_k^+ = -2 g cos k + O(g^3); the theta in front scales as g p
        return float(abs(theta * (1.0 - 2.0 * np.sum(np.cos(ks)))))
    return float(abs(theta * (1.0 + np.sum(np.imag(eps_plus(g, ks))) / g)))


def frequency_even(g: float, theta: float) -> float:
    """L-independent even-L frequency: 0 for g <= 1, 2 theta sqrt(1 - 1/g^2) above."""
    if g < 0:
        raise InvalidParameterError(f"g must be >= 0, got {g}")
    if g <= 1.0:
        return 0.0
    return float(2.0 * theta * np.sqrt(1.0 - 1.0 / (g * g)))


def _d2_re_eps(g: float, k: np.ndarray | float) -> np.ndarray | float:
    """Re d^2 eps_k^+ / dg^2 = Re[-2 sin^2 k (1 - g^2 - 2ig cos k)^{-3/2}]."""
    u = 1.0 - g * g - 2j * g * np.cos(k)
    return np.real(-2.0 * np.sin(k) ** 2 * u ** -1.5)


def gamma_curvature(g: float, p: float, L: int | float) -> float:
    """Second derivative of the decay rate with respect to g.

    For finite L the sum is differentiated term by term (exact closed
    form per mode) over the leading sector.  For L = inf the momentum
    integral is evaluated by adaptive quadrature split at k = pi/2,
    where the integrand jumps across the branch cut for g > 1; the
    result diverges as -(sqrt(2)/pi) (g-1)^(-1/2) for g -> 1+ and has a
    finite limit for g -> 1-.
    """
    if not math.isinf(L):
        L = int(L)
        if L % 2 == 0:
            sector = half_pi_sector(L).other
        else:
            sector = Sector.APBC
        ks = build_grid(L, sector).values
        return float(-p / L * np.sum(_d2_re_eps(g, ks)))

    def integrand(k: float) -> float:
        return float(_d2_re_eps(g, k))

    if g > 1.0:
        v1, _ = quad(integrand, 0.0, math.pi / 2, limit=400)
        v2, _ = quad(integrand, math.pi / 2, math.pi, limit=400)
        total = v1 + v2
    else:
        total, _ = quad(integrand, 0.0, math.pi, limit=400, points=[math.pi / 2])
    return float(-p / (2.0 * math.pi) * total)


def phase_offset_odd(g: float, p: float, L: int) -> float:
    """Time-independent phase of the odd-L oscillation (APBC sum)."""
    if L % 2 == 0:
        raise UnsupportedConfigurationError("phase offset defined for odd L")
    ks = build_grid(L, Sector.APBC).values
    e = eps_plus(g, ks)
    return float(np.sum(np.angle(1.0 + (2.0 - 2j * g * np.cos(ks)) / e)))


@dataclass(frozen=True)
class LateTimeCharacter:
    """Late-time envelope data: rates, frequency, and odd-L phase offset."""

    Gamma: float
    GammaPrime: float | None
    omega: float
    phi: float | None


def late_time_character(g: float, p: float, theta: float, L: int) -> LateTimeCharacter:
    """Assemble the late-time description for one chain length.

    Odd L: single rate, finite-L frequency, and phase offset.  Even L:
    leading rate from the sector without pi/2, subleading rate from the
    sector with it, and the L-independent frequency.
    """
    if L % 2 == 1:
        return LateTimeCharacter(
            Gamma=decay_rate(g, p, L, Sector.APBC),
            GammaPrime=None,
            omega=frequency_odd(g, theta, L),
            phi=phase_offset_odd(g, p, L),
        )
    sub = half_pi_sector(L)
    return LateTimeCharacter(
        Gamma=decay_rate(g, p, L, sub.other),
        GammaPrime=decay_rate(g, p, L, sub),
        omega=frequency_even(g, theta),
        phi=None,
    )


def scaling_ansatz_check(
    quantity: str,
    g_window: tuple[float, float],
    L_list: list[int],
    *,
    theta: float = 1.0,
    p: float = 1.0,
    n_points: int = 60,
) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """Generate per-L curves of a late-time quantity for scaling collapse.

    Parameters
    ----------
    quantity : {"omega", "d2gamma"}
        Which quantity to sweep: the odd-L frequency or the decay-rate
        curvature.
    g_window : (float, float)
        Inclusive coupling window.
    L_list : list of int
        Chain lengths; must share one parity (the two parities collapse
        onto distinct scaling functions).

    Returns
    -------
    list of (L, g_values, y_values)
        Raw curves; feed to :func:`ctfim.analysis.collapse`.
    """
    if len(L_list) == 0:
        raise InvalidParameterError("L_list must be non-empty")
    parities = {L % 2 for L in L_list}
    if len(parities) > 1:
        raise InvalidParameterError(
            "L_list mixes parities; even and odd L scale onto distinct "
            "master curves and must be collapsed separately"
        )
    lo, hi = g_window
    if not lo < hi:
        raise InvalidParameterError(f"empty g window {g_window}")
    gs = np.linspace(lo, hi, n_points)
    out = []
    for L in L_list:
        if quantity == "omega":
            if L % 2 == 0:
                raise UnsupportedConfigurationError(
                    "omega sweeps use odd L (even-L frequency is L-independent)"
                )
            ys = np.array([frequency_odd(g, theta, L) for g in gs])
        elif quantity == "d2gamma":
            ys = np.array([gamma_curvature(g, p, L) for g in gs])
        else:
            raise InvalidParameterError(f"unknown quantity {quantity!r}")
        out.append((int(L), gs.copy(), ys))
    return out
