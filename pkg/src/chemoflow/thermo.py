"""Barotropic pressure law, internal energy, and interpolation exponents.

All thermodynamic functions accept scalars or numpy arrays and are
vectorized.  Densities must be nonnegative; callers that need a floor
apply it before calling in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PressureLaw:
    """Power pressure law p(rho) = rho**gamma with gamma > 1."""

    gamma: float = 2.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must be > 1, got {self.gamma}")


def _check_nonneg(rho, name: str = "rho"):
    arr = np.asarray(rho, dtype=np.float64)
    if arr.size and float(arr.min()) < 0.0:
        raise ValueError(f"{name} must be nonnegative, min = {float(arr.min())!r}")
    return arr


def _check_pos(r, name: str = "r"):
    arr = np.asarray(r, dtype=np.float64)
    if arr.size == 0 or float(arr.min()) <= 0.0:
        raise ValueError(f"{name} must be strictly positive")
    return arr


def pressure(rho, law: PressureLaw):
    """p(rho) = rho**gamma."""
    arr = _check_nonneg(rho)
    return arr ** law.gamma


def internal_energy(rho, law: PressureLaw):
    """psi(rho) = rho**gamma / (gamma - 1), the pressure potential.

    Satisfies p = rho * psi'(rho) - psi(rho).
    """
    arr = _check_nonneg(rho)
    return arr ** law.gamma / (law.gamma - 1.0)


def psi_prime(rho, law: PressureLaw):
    """psi'(rho) = gamma * rho**(gamma - 1) / (gamma - 1)."""
    arr = _check_nonneg(rho)
    g = law.gamma
    return (g / (g - 1.0)) * arr ** (g - 1.0)


def psi_second(rho, law: PressureLaw):
    """psi''(rho) = gamma * rho**(gamma - 2); equals p'(rho) / rho."""
    arr = _check_nonneg(rho)
    g = law.gamma
    if g < 2.0 and arr.size and float(arr.min()) == 0.0:
        raise ValueError("psi_second is singular at rho = 0 for gamma < 2")
    return g * arr ** (g - 2.0)


def bregman_psi(rho, r, law: PressureLaw):
    """Bregman distance psi(rho | r) = psi(rho) - psi(r) - psi'(r) (rho - r).

    Nonnegative by convexity of psi, zero exactly when rho == r.  The
    base point r must be strictly positive.
    """
    arr = _check_nonneg(rho)
    base = _check_pos(r)
    return (
        internal_energy(arr, law)
        - internal_energy(base, law)
        - psi_prime(base, law) * (arr - base)
    )


def relative_pressure(rho, r, law: PressureLaw):
    """p(rho | r) = (gamma - 1) * psi(rho | r), the pressure Bregman gap."""
    return (law.gamma - 1.0) * bregman_psi(rho, r, law)


def bregman_gap_bounds(
    law: PressureLaw,
    r_lo: float = 0.5,
    r_hi: float = 2.0,
    rho_big: float = 4.0,
    n: int = 2001,
) -> tuple[float, float]:
    """Numerically fitted comparability constants for the Bregman gap.

    Returns (c_quad, c_tail) such that, over base points r in
    [r_lo, r_hi],

        psi(rho | r) >= c_quad * (rho - r)**2   for rho in [0, rho_big]
        psi(rho | r) >= c_tail * rho**gamma     for rho >= rho_big

    The constants come from a deterministic scan on linspace samples;
    the tail scan covers [rho_big, 16 * rho_big], past which the ratio
    is monotone in rho.
    """
    if not (0.0 < r_lo < r_hi < rho_big):
        raise ValueError("need 0 < r_lo < r_hi < rho_big")
    rs = np.linspace(r_lo, r_hi, 101)
    c_quad = np.inf
    c_tail = np.inf
    rho_mid = np.linspace(0.0, rho_big, n)
    rho_tail = np.linspace(rho_big, 16.0 * rho_big, n)
    for r in rs:
        gap_mid = bregman_psi(rho_mid, r, law)
        dq = (rho_mid - r) ** 2
        mask = dq > 1e-12
        c_quad = min(c_quad, float(np.min(gap_mid[mask] / dq[mask])))
        # Limit rho -> r of gap / (rho - r)^2 is psi''(r) / 2.
        c_quad = min(c_quad, 0.5 * float(psi_second(r, law)))
        gap_tail = bregman_psi(rho_tail, r, law)
        c_tail = min(c_tail, float(np.min(gap_tail / rho_tail ** law.gamma)))
    return c_quad, c_tail


@dataclass(frozen=True)
class SugiyamaExponents:
    """Exponent bundle for the rho*c interpolation bound in dimension d.

    theta is the Gagliardo-Nirenberg interpolation weight and c2 the
    exponent of the L1 norm of c in the closing Young inequality.
    """

    m: float
    d: int
    theta: float
    c2: float


def sugiyama_exponents(m: float, d: int) -> SugiyamaExponents:
    """Exponents for bounding the coupling integral of rho and c.

    Valid for d in {2, 3} and m > 2 (d + 1) / (d + 2); equivalently the
    closing exponent m * theta / (m - 1) must stay below 2.  Outside
    that range the bound fails and a ValueError is raised.
    """
    if d not in (2, 3):
        raise ValueError(f"d must be 2 or 3, got {d}")
    m = float(m)
    m_min = 2.0 * (d + 1) / (d + 2)
    if not m > m_min:
        raise ValueError(
            f"m must exceed 2(d+1)/(d+2) = {m_min!r} for d = {d}, got {m!r}"
        )
    theta = 2.0 * d / (m * (d + 2))
    if not m * theta / (m - 1.0) < 2.0:
        raise ValueError(
            f"inadmissible pair (m, d) = ({m!r}, {d}): closing exponent "
            f"{m * theta / (m - 1.0)!r} is not below 2"
        )
    c2 = max(
        m / (m - 1.0),
        2.0 * m * (1.0 - theta) / (2.0 * (m - 1.0) - m * theta),
    )
    return SugiyamaExponents(m=m, d=d, theta=theta, c2=c2)
