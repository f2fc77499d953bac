"""Single-particle complex spectrum and Bogoliubov data of the cTFIM.

Each momentum pair (k, -k) with 0 < k < pi carries a 2x2 non-Hermitian
block whose eigenvalues are ``eps_k^{+-} = +-2 sqrt(1 - g^2 - 2i g cos k)``
(principal branch, so Re eps_+ >= 0).  The block is diagonalized by a
non-unitary matrix P whose columns encode the Bogoliubov coefficients
``alpha_{+-} = (2g + 2i cos k + i eps^{+-}) / (2 sin k)``.  At g = 1 the
k = pi/2 block degenerates to a Jordan block (exceptional point) and the
coefficients do not exist.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi

import numpy as np

from .core import (
    EP_TOL,
    ExceptionalPointError,
    InvalidParameterError,
    MomentumGrid,
    Sector,
    principal_sqrt,
)

__all__ = [
    "ComplexSpectrumPoint",
    "ZeroModeEnergies",
    "dispersion",
    "eps_plus",
    "bogoliubov_matrices",
    "zero_mode_energies",
    "conjugate_pair_check",
    "real_gap",
    "imag_branch_jump",
]


def eps_plus(g: float, k: float | np.ndarray) -> complex | np.ndarray:
    """Positive-branch complex energy eps_k^+ (vectorized over k)."""
    return 2.0 * principal_sqrt(1.0 - g * g - 2j * g * np.cos(k))


def is_exceptional(g: float, k: float) -> bool:
    """Whether (g, k) is the exceptional point within EP_TOL."""
    return abs(g - 1.0) < EP_TOL and abs(k - pi / 2) < EP_TOL


@dataclass(frozen=True)
class ComplexSpectrumPoint:
    """Spectrum data of one momentum block.

    ``alpha_plus`` and ``alpha_minus`` are None exactly when the block is
    exceptional (g = 1, k = pi/2) and no eigenbasis exists.
    """

    k: float
    eps_plus: complex
    alpha_plus: complex | None
    alpha_minus: complex | None
    is_exceptional: bool


def dispersion(g: float, k: float) -> ComplexSpectrumPoint:
    """Evaluate the complex dispersion and Bogoliubov coefficients at k.

    Parameters
    ----------
    g : float
        Dimensionless coupling theta / p, >= 0.
    k : float
        Momentum in the open interval (0, pi).
    """
    if not 0.0 < k < pi:
        raise InvalidParameterError(f"k must lie in (0, pi), got {k}")
    e = eps_plus(g, k)
    if is_exceptional(g, k):
        return ComplexSpectrumPoint(
            k=k, eps_plus=complex(e), alpha_plus=None, alpha_minus=None,
            is_exceptional=True,
        )
    s = np.sin(k)
    a_p = (2 * g + 2j * np.cos(k) + 1j * e) / (2 * s)
    a_m = (2 * g + 2j * np.cos(k) - 1j * e) / (2 * s)
    return ComplexSpectrumPoint(
        k=k, eps_plus=complex(e), alpha_plus=complex(a_p),
        alpha_minus=complex(a_m), is_exceptional=False,
    )


def bogoliubov_matrices(g: float, k: float) -> tuple[np.ndarray, np.ndarray]:
    """Non-unitary diagonalizer P and its inverse for one momentum block.

    Returns (P, Pinv) with P^{-1} H_k P diagonal; raises at the
    exceptional point where the block is a Jordan cell.
    """
    pt = dispersion(g, k)
    if pt.is_exceptional:
        raise ExceptionalPointError(
            "no eigenbasis at g = 1, k = pi/2 (Jordan block)"
        )
    pref = np.sqrt(np.sin(k) + 0j) / np.sqrt(pt.eps_plus)
    P = pref * np.array([[1.0, 1j], [pt.alpha_plus, 1j * pt.alpha_minus]])
    Pinv = pref * np.array([[1j * pt.alpha_minus, -1j], [-pt.alpha_plus, 1.0]])
    return P, Pinv


@dataclass(frozen=True)
class ZeroModeEnergies:
    """Energies of the boundary blocks H_0 and H_pi per occupation.

    H_0 = (ig - 1)(2 n_0 - 1) lives in the odd-parity (PBC) sector;
    H_pi = (ig + 1)(2 n_pi - 1) lives in PBC for even L, APBC for odd L.
    """

    e0_occupied: complex
    e0_empty: complex
    epi_occupied: complex
    epi_empty: complex
    e0_sector: Sector
    epi_sector: Sector


def zero_mode_energies(g: float, L: int) -> ZeroModeEnergies:
    """Boundary-mode energies and their sector assignment for chain length L."""
    e0 = 1j * g - 1.0
    epi = 1j * g + 1.0
    return ZeroModeEnergies(
        e0_occupied=e0,
        e0_empty=-e0,
        epi_occupied=epi,
        epi_empty=-epi,
        e0_sector=Sector.PBC,
        epi_sector=Sector.PBC if L % 2 == 0 else Sector.APBC,
    )


def conjugate_pair_check(g: float, grid: MomentumGrid, tol: float = 1e-12) -> bool:
    """Verify eps^+(pi - k) = conj(eps^+(k)) over a grid.

    Momenta within EP_TOL of pi/2 are skipped when g = 1 (the identity is
    an equality of limits there, not of branch values).
    """
    ks = grid.values
    if abs(g - 1.0) < EP_TOL:
        ks = ks[np.abs(ks - pi / 2) > EP_TOL]
    if len(ks) == 0:
        return True
    lhs = eps_plus(g, pi - ks)
    rhs = np.conj(eps_plus(g, ks))
    return bool(np.max(np.abs(lhs - rhs)) < tol)


def real_gap(g: float, check: bool = False) -> float:
    """Infimum over k in (0, pi) of Re eps_k^+.

    The minimizer sits at k = pi/2, where the gap is 2 sqrt(1 - g^2) for
    g < 1 and closes to zero for g >= 1.  With ``check=True`` the closed
    form is validated against a dense momentum scan.
    """
    if g < 0:
        raise InvalidParameterError(f"g must be >= 0, got {g}")
    gap = 0.0 if g >= 1.0 else float(2.0 * np.sqrt(1.0 - g * g))
    if check:
        ks = np.linspace(1e-9, pi - 1e-9, 20001)
        dense = float(np.min(np.real(eps_plus(g, ks))))
        if dense < gap - 1e-6 or (g < 1 and dense > gap + 1e-3):
            raise RuntimeError(
                f"gap self-check failed: closed form {gap}, scan {dense}"
            )
    return gap


def imag_branch_jump(g: float) -> float:
    """Magnitude of the jump of Im eps_k^+ across k = pi/2 (zero for g <= 1)."""
    if g <= 1.0:
        return 0.0
    return float(4.0 * g * np.sqrt(1.0 - 1.0 / (g * g)))
