"""Shared parameter objects, momentum grids, and branch conventions.

The qubit chain is parametrized by a dissipation rate ``p``, a unitary
rotation rate ``theta``, and the derived dimensionless coupling
``g = theta / p``.  Non-local observables of the channel dynamics are
evaluated by free-fermion sums over parity-resolved momentum grids
(anti-periodic or periodic), with the boundary modes ``k = 0`` and
``k = pi`` bookkept separately and the symmetric mode ``k = pi/2``
flagged.  Momenta are stored as exact rational multiples of pi so that
grid-identity and parity logic is integer arithmetic; they are converted
to floating point only at use sites.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import pi

import numpy as np

__all__ = [
    "Sector",
    "SpecialModes",
    "MomentumGrid",
    "ModelParams",
    "BranchConvention",
    "build_grid",
    "principal_sqrt",
    "InvalidParameterError",
    "ExceptionalPointError",
    "UnsupportedConfigurationError",
    "DegenerateStateError",
    "NumericalFailureError",
    "InsufficientOscillationError",
]

# tolerance below which (g, k) counts as the exceptional point
EP_TOL = 1e-12


class InvalidParameterError(ValueError):
    """A parameter violates its documented domain."""


class ExceptionalPointError(ValueError):
    """Operation is undefined at the exceptional point g = 1, k = pi/2."""


class UnsupportedConfigurationError(ValueError):
    """The requested configuration is outside the supported family."""


class DegenerateStateError(ValueError):
    """A state with zero trace (or similar degeneracy) was supplied."""


class NumericalFailureError(RuntimeError):
    """A numerical invariant (reality, convergence) was violated."""


class InsufficientOscillationError(ValueError):
    """Too few zero crossings to estimate a frequency (overdamped signal)."""


class Sector(str, Enum):
    """Fermion boundary-condition sector selected by the Ising parity."""

    APBC = "APBC"
    PBC = "PBC"

    @property
    def other(self) -> "Sector":
        return Sector.PBC if self is Sector.APBC else Sector.APBC


@dataclass(frozen=True)
class SpecialModes:
    """Presence flags for the special momenta of a grid.

    ``has_zero`` and ``has_pi`` mark boundary modes that live outside the
    open interval (0, pi) and are treated as separate 1-fermion blocks;
    ``has_half_pi`` marks the self-conjugate mode k = pi/2, which sits
    inside the grid but is flagged because it controls the even-L
    oscillation and the exceptional point.
    """

    has_zero: bool
    has_pi: bool
    has_half_pi: bool


@dataclass(frozen=True)
class MomentumGrid:
    """Parity-resolved momentum grid on the open interval (0, pi).

    Attributes
    ----------
    sector : Sector
        APBC (even Ising parity) or PBC (odd Ising parity).
    L : int
        Chain length.
    fractions : tuple of Fraction
        Momenta as exact multiples of pi, strictly increasing in (0, 1).
    special : SpecialModes
        Flags for k = 0, pi (boundary blocks) and k = pi/2.
    """

    sector: Sector
    L: int
    fractions: tuple[Fraction, ...]
    special: SpecialModes = field(compare=False)

    def __len__(self) -> int:
        return len(self.fractions)

    @property
    def values(self) -> np.ndarray:
        """Momenta in radians as a float array."""
        return np.array([pi * float(f) for f in self.fractions])

    def full_circle(self) -> np.ndarray:
        """All L momenta of the sector in (-pi, pi], boundary modes included."""
        ks = [pi * float(f) for f in self.fractions]
        full = sorted([-k for k in ks] + ks)
        if self.special.has_zero:
            full.append(0.0)
        if self.special.has_pi:
            full.append(pi)
        out = np.array(sorted(full))
        if len(out) != self.L:
            raise NumericalFailureError(
                f"sector {self.sector} of L={self.L} has {len(out)} modes"
            )
        return out


def build_grid(L: int, sector: Sector | str) -> MomentumGrid:
    """Enumerate the momentum grid of one boundary-condition sector.

    APBC momenta are the odd multiples of pi/L in (0, pi); PBC momenta are
    the even multiples.  k = 0 always belongs to PBC; k = pi belongs to PBC
    for even L and to APBC for odd L.  The mode k = pi/2 exists only for
    even L and sits in PBC when L/2 is even, in APBC when L/2 is odd.

    Parameters
    ----------
    L : int
        Chain length, at least 2.
    sector : Sector or str
        Which parity sector to enumerate.

    Returns
    -------
    MomentumGrid
    """
    if not isinstance(L, (int, np.integer)) or isinstance(L, bool):
        raise InvalidParameterError(f"L must be an integer, got {L!r}")
    if L < 2:
        raise InvalidParameterError(f"L must be at least 2, got {L}")
    sector = Sector(sector)

    if sector is Sector.APBC:
        fracs = [Fraction(2 * n - 1, L) for n in range(1, L // 2 + 1)]
    else:
        fracs = [Fraction(2 * n, L) for n in range(1, (L + 1) // 2)]
    fracs = tuple(f for f in fracs if 0 < f < 1)

    has_zero = sector is Sector.PBC
    if L % 2 == 0:
        has_pi = sector is Sector.PBC
    else:
        has_pi = sector is Sector.APBC
    half = Fraction(1, 2)
    has_half_pi = half in fracs

    # parity bookkeeping cross-check: pi/2 in PBC iff L/2 even
    if L % 2 == 0:
        expected = Sector.PBC if (L // 2) % 2 == 0 else Sector.APBC
        if has_half_pi != (sector is expected):
            raise NumericalFailureError("pi/2 sector assignment inconsistent")

    return MomentumGrid(
        sector=sector,
        L=int(L),
        fractions=fracs,
        special=SpecialModes(has_zero=has_zero, has_pi=has_pi, has_half_pi=has_half_pi),
    )


def half_pi_sector(L: int) -> Sector:
    """Sector containing the k = pi/2 mode (even L only)."""
    if L % 2:
        raise UnsupportedConfigurationError(f"k = pi/2 requires even L, got L={L}")
    return Sector.PBC if (L // 2) % 2 == 0 else Sector.APBC


def principal_sqrt(z: complex | np.ndarray) -> complex | np.ndarray:
    """Principal complex square root, Re sqrt(z) >= 0.

    On the branch cut (negative reals) the sign of the imaginary part
    follows the principal branch of the underlying arithmetic, i.e.
    sqrt(-1) = +1j for a real or +0j input.
    """
    arr = np.asarray(z, dtype=complex)
    out = np.sqrt(arr)
    if arr.ndim == 0:
        return complex(out)
    return out


@dataclass(frozen=True)
class BranchConvention:
    """Record of the square-root branch used throughout the package."""

    rule: str = "principal: Re sqrt(z) >= 0"


@dataclass(frozen=True)
class ModelParams:
    """Couplings and geometry of the dissipative chain.

    Parameters
    ----------
    p : float
        Dissipation rate (inverse time), > 0.
    theta : float
        Unitary rotation rate (inverse time), >= 0.
    L : int
        Chain length, >= 2.
    T : float
        Total evolution time, >= 0.
    dt : float, optional
        Trotter step for the channel oracle, > 0.
    d : int
        Spatial dimension, mean-field use only, >= 1.

    The coupling ``g = theta / p`` is derived, never stored.
    """

    p: float
    theta: float
    L: int
    T: float = 0.0
    dt: float | None = None
    d: int = 1

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise InvalidParameterError(f"p must be > 0, got {self.p}")
        if self.theta < 0:
            raise InvalidParameterError(f"theta must be >= 0, got {self.theta}")
        if not isinstance(self.L, (int, np.integer)) or self.L < 2:
            raise InvalidParameterError(f"L must be an integer >= 2, got {self.L}")
        if self.T < 0:
            raise InvalidParameterError(f"T must be >= 0, got {self.T}")
        if self.dt is not None and not self.dt > 0:
            raise InvalidParameterError(f"dt must be > 0, got {self.dt}")
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise InvalidParameterError(f"d must be an integer >= 1, got {self.d}")

    @property
    def g(self) -> float:
        """Dimensionless coupling theta / p."""
        return self.theta / self.p

    def with_(self, **changes) -> "ModelParams":
        """Copy with selected fields replaced."""
        from dataclasses import replace

        return replace(self, **changes)
