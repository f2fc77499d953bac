"""Exact evaluation of the string observable <prod_j sigma^z_j>(T).

The expectation value decomposes into one product per parity sector.
Each momentum pair contributes a mode factor

    f(k) = [cosh(pT eps) + (2 - 2ig cos k)/eps * sinh(pT eps)] e^{-2pT},

accumulated in log-polar form (sum of log-magnitudes, sum of phases)
because the oscillatory phase in the product of many small factors
cancels finely and a naive product loses it to rounding.  For odd L the
two sector products are complex conjugates and the observable is
Re(e^{i g p T} prod f); for even L each sector product is real and the
observable is the half-sum, with the sign carried by the self-conjugate
k = pi/2 factor.

At the exceptional point g = 1 the pi/2 block is a Jordan cell and its
factor becomes (1 + 2pT) e^{-2pT}, the continuous g -> 1 limit of the
generic formula (verified against the exact channel).

The module also provides the single-qubit benchmark: the 2x2 model
H = -tau^z + i g tau^x whose return amplitude shows the same
underdamped/overdamped transition at g = 1.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from math import pi

import numpy as np
from scipy.linalg import expm

from .core import (
    EP_TOL,
    ExceptionalPointError,
    InvalidParameterError,
    ModelParams,
    NumericalFailureError,
    Sector,
    build_grid,
)
from .spectrum import eps_plus

__all__ = [
    "ModeFactor",
    "SectorProduct",
    "StringExpectation",
    "mode_factor",
    "exceptional_mode_factor",
    "string_expectation",
    "qubit0d_observable",
    "qubit0d_rates",
]

# below this distance from g = 1 the pi/2 factor switches to its Taylor form
NEAR_EP_TOL = 1e-8
# admissible imaginary residue of the assembled observable, relative
REALITY_TOL = 1e-10


@dataclass(frozen=True)
class ModeFactor:
    """One pair factor f(k) in log-polar form."""

    k: float
    log_magnitude: float
    phase: float

    @property
    def value(self) -> complex:
        return cmath.exp(complex(self.log_magnitude, self.phase))


def _log_f(g: float, p: float, T: float, k: float) -> complex:
    """log f(k), stable for large pT (argument of cosh/sinh kept in exp form)."""
    e = eps_plus(g, k)
    z = p * T * e
    c = (2.0 - 2j * g * np.cos(k)) / e
    # cosh z + c sinh z = e^z [(1+c) + (1-c) e^{-2z}] / 2,  Re z >= 0
    return z - 2.0 * p * T + np.log(0.5 * ((1.0 + c) + (1.0 - c) * np.exp(-2.0 * z)))


def _log_f_half_pi_near_ep(g: float, p: float, T: float) -> complex:
    """Taylor form of log f(pi/2) in s^2 = 1 - g^2 near the removable 0/0."""
    t = 2.0 * p * T
    s2 = 1.0 - g * g
    val = (1.0 + t) + s2 * (t * t / 2.0 + t ** 3 / 6.0)
    return np.log(val + 0j) - t


def mode_factor(params: ModelParams, k: float) -> ModeFactor:
    """Pair factor f(k) of the string observable, in log-polar form.

    Raises ExceptionalPointError for the exceptional input (g = 1,
    k = pi/2); use :func:`exceptional_mode_factor` there.  Within
    ``NEAR_EP_TOL`` of g = 1 the k = pi/2 factor is evaluated by a Taylor
    expansion in 1 - g^2 to avoid the removable 0/0.
    """
    if not 0.0 < k < pi:
        raise InvalidParameterError(f"k must lie in (0, pi), got {k}")
    g, p, T = params.g, params.p, params.T
    at_half_pi = abs(k - pi / 2) < EP_TOL
    if at_half_pi and abs(g - 1.0) < EP_TOL:
        raise ExceptionalPointError(
            "exceptional input; use exceptional_mode_factor"
        )
    if at_half_pi and abs(g - 1.0) < NEAR_EP_TOL:
        lf = _log_f_half_pi_near_ep(g, p, T)
    else:
        lf = _log_f(g, p, T, k)
    return ModeFactor(k=k, log_magnitude=float(lf.real), phase=float(lf.imag))


def exceptional_mode_factor(params: ModelParams) -> ModeFactor:
    """The k = pi/2 factor exactly at g = 1: (1 + 2pT) e^{-2pT}.

    The block is a Jordan cell there, so exp(-pT H) = 1 - pT H and the
    sandwich evaluates to 1 + 2pT; this is also the continuous limit of
    the generic factor and reproduces the exact channel.  The factor is
    strictly positive, so the phase is 0.
    """
    if abs(params.g - 1.0) > EP_TOL:
        raise InvalidParameterError(
            f"exceptional factor requires g = 1, got g = {params.g}"
        )
    if params.L % 2:
        raise InvalidParameterError("k = pi/2 requires even L")
    t = 2.0 * params.p * params.T
    return ModeFactor(k=pi / 2, log_magnitude=float(np.log1p(t) - t), phase=0.0)


@dataclass(frozen=True)
class SectorProduct:
    """One sector's contribution in log-polar form (zero modes included)."""

    sector: Sector
    log_magnitude: float
    phase: float

    @property
    def value(self) -> complex:
        return cmath.exp(complex(self.log_magnitude, self.phase))


@dataclass(frozen=True)
class StringExpectation:
    """Assembled <prod_j sigma^z_j>(T) with its per-sector decomposition."""

    value: float
    decomposition: tuple[SectorProduct, SectorProduct]

    @property
    def log_magnitudes(self) -> tuple[float, float]:
        return tuple(s.log_magnitude for s in self.decomposition)


def _sector_product(params: ModelParams, sector: Sector) -> SectorProduct:
    """Accumulate log|f| and arg f over one sector, zero-mode phases included."""
    g, p, T, L = params.g, params.p, params.T, params.L
    grid = build_grid(L, sector)
    logmag = 0.0
    phase = 0.0
    for k in grid.values:
        if abs(g - 1.0) < EP_TOL and abs(k - pi / 2) < EP_TOL:
            mf = exceptional_mode_factor(params)
        else:
            mf = mode_factor(params, k)
        logmag += mf.log_magnitude
        phase = (phase + mf.phase) % (2.0 * pi)
    # boundary blocks contribute e^{pT} e^{+- i g p T}: the ground-sector
    # occupations are n_0 = 1 and n_pi = 0, and the factor is normalized by
    # the same e^{2pT} per mode as f(k), leaving only the phase per parity.
    if L % 2 == 1:
        phase = (phase + (g * p * T if sector is Sector.APBC else -g * p * T)) % (2.0 * pi)
    return SectorProduct(sector=sector, log_magnitude=logmag, phase=phase)


def string_expectation(params: ModelParams) -> StringExpectation:
    """Exact string expectation <prod_j sigma^z_j> at time T.

    For odd L the value is Re(e^{i g p T} prod_{k in APBC} f(k)); for even
    L it is the half-sum of the two sector products, each real, with the
    sign set by f(pi/2) in the sector that contains it.
    """
    s_a = _sector_product(params, Sector.APBC)
    s_p = _sector_product(params, Sector.PBC)
    val = 0.5 * (s_a.value + s_p.value)
    scale = max(1.0, abs(val))
    if abs(val.imag) > REALITY_TOL * scale:
        raise NumericalFailureError(
            f"imaginary residue {val.imag:.3e} exceeds tolerance"
        )
    value = float(val.real)
    if abs(value) > 1.0 + 1e-9:
        raise NumericalFailureError(f"|value| = {abs(value)} exceeds 1")
    return StringExpectation(value=value, decomposition=(s_a, s_p))


# --- single-qubit benchmark -------------------------------------------------

_TAUZ = np.diag([1.0, -1.0]).astype(complex)
_TAUX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def _h0d(g: float) -> np.ndarray:
    return -_TAUZ + 1j * g * _TAUX


def qubit0d_observable(params: ModelParams, T: float | np.ndarray) -> float | np.ndarray:
    """Single-qubit <sigma^z(T)> by exact 2x2 matrix exponentials.

    Evaluates <0| exp(-pT H(g)) |0> / <0| exp(-pT H(0)) |0> with
    H(g) = -tau^z + i g tau^x.  Valid at every g including the
    exceptional point g = 1, where the Jordan-block exponential produces
    the (1 + pT) e^{-pT} form.
    """
    g, p = params.g, params.p
    H = _h0d(g)

    def _one(t: float) -> float:
        num = expm(-p * t * H)[0, 0]
        den = np.exp(p * t)  # <0|exp(-pT H(0))|0> with H(0)|0> = -|0>
        val = num / den
        if abs(val.imag) > 1e-12 * max(1.0, abs(val)):
            raise NumericalFailureError("single-qubit observable not real")
        return float(val.real)

    if np.ndim(T) == 0:
        return _one(float(T))
    return np.array([_one(float(t)) for t in np.asarray(T)])


def qubit0d_rates(g: float, p: float) -> tuple[float, float]:
    """Late-time decay rate and oscillation frequency of the 0-d benchmark.

    Overdamped g < 1: Gamma = p(1 - sqrt(1 - g^2)), omega = 0.
    Underdamped g > 1: Gamma = p, omega = p sqrt(g^2 - 1), i.e. the
    eigenvalue splitting of H(g); equivalently theta sqrt(1 - 1/g^2).
    Exactly at g = 1 the decay carries a time-dependent logarithmic
    correction and no constant rate exists, so the call refuses.
    """
    if g < 0:
        raise InvalidParameterError(f"g must be >= 0, got {g}")
    if not p > 0:
        raise InvalidParameterError(f"p must be > 0, got {p}")
    if abs(g - 1.0) < EP_TOL:
        raise ExceptionalPointError(
            "no constant decay rate at g = 1 (logarithmic-correction regime); "
            "use qubit0d_observable for the time-dependent form"
        )
    if g < 1.0:
        return p * (1.0 - float(np.sqrt(1.0 - g * g))), 0.0
    return p, p * float(np.sqrt(g * g - 1.0))
