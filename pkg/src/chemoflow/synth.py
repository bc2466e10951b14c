"""Analytic field recipes: blobs and seeded random trigonometric fields.

Recipes are plain callables of cell-center coordinate arrays, so one
recipe can be sampled on any resolution.  Randomness comes from a
seeded PCG64 generator, which keeps ensembles reproducible.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def gaussian_blob(
    background: float = 0.5,
    amplitude: float = 0.5,
    width: float = 0.1,
    cx: float = 0.5,
    cy: float = 0.5,
) -> Callable:
    """Isotropic Gaussian bump over a constant background.

    Not exactly periodic, but the wrap mismatch is below roundoff for
    widths up to about an eighth of the domain.
    """

    def fn(X, Y):
        r2 = (X - cx) ** 2 + (Y - cy) ** 2
        return background + amplitude * np.exp(-r2 / (2.0 * width ** 2))

    return fn


def random_trig_scalar(
    rng: np.random.Generator,
    kmax: int = 2,
    amplitude: float = 1.0,
    lx: float = 1.0,
    ly: float = 1.0,
) -> Callable:
    """Zero-mean random periodic trigonometric polynomial.

    Wavenumbers up to kmax per direction with spectrally decaying
    coefficients, so samples are smooth at any working resolution.
    """
    modes = []
    for kx in range(-kmax, kmax + 1):
        for ky in range(0, kmax + 1):
            if ky == 0 and kx <= 0:
                continue
            decay = 1.0 / (1.0 + kx * kx + ky * ky)
            coef = amplitude * decay * rng.standard_normal()
            phase = rng.uniform(0.0, 2.0 * np.pi)
            modes.append((kx, ky, coef, phase))

    def fn(X, Y):
        out = np.zeros_like(np.asarray(X, dtype=np.float64))
        for kx, ky, coef, phase in modes:
            out += coef * np.cos(2.0 * np.pi * (kx * X / lx + ky * Y / ly) + phase)
        return out

    return fn


def random_nonneg_scalar(
    rng: np.random.Generator,
    kmax: int = 2,
    amplitude: float = 1.0,
    base: float = 0.0,
    lx: float = 1.0,
    ly: float = 1.0,
) -> Callable:
    """Nonnegative smooth random field: a squared trig polynomial plus base."""
    g = random_trig_scalar(rng, kmax=kmax, amplitude=amplitude, lx=lx, ly=ly)

    def fn(X, Y):
        w = g(X, Y)
        return w * w + base

    return fn
