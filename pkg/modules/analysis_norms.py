#!/usr/bin/env python3
"""
analysis_norms.py

Zero-mean Sobolev norms ||f||_{V^k} = ||d^k f / dz^k||_{L^2}, the product W^k norm on
(u, w) pairs, embedding-constant margins and the Fejer / Jackson mollifiers.
"""

import logging
import math
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import DiagnosticsError
from .models import ModelState
from .spectral_core import Field, mode_weights, derivative, eval_at_points, require_zero_mean

logger = logging.getLogger(__name__)

MOLLIFIER_KERNELS = ("fejer", "jackson")


class NormProfile(BaseModel):
    """V^k norms of u (shifted by one derivative) and w for k = 0..k_max."""

    model_config = ConfigDict(frozen=True)

    k_max: int
    vk_u: List[float]
    vk_omega: List[float]
    wk: List[float]

    @model_validator(mode="after")
    def _check_lengths(self) -> "NormProfile":
        expected = self.k_max + 1
        if not len(self.vk_u) == len(self.vk_omega) == len(self.wk) == expected:
            raise ValueError(f"norm vectors must all have length k_max + 1 = {expected}")
        return self

# -----------------------------------------------------------------------------
# Norms
# -----------------------------------------------------------------------------

def vk_norm(f: Field, k: int) -> float:
    """
    ||f||_{V^k} by Parseval on the discrete spectrum.

    Raises:
        ZeroMeanError: for data with a nonzero mean.
    """
    n = f.grid.n_points
    if k < 0 or k > n // 4:
        raise ValueError(f"k must lie in [0, {n // 4}], got {k}")
    require_zero_mean(f)
    weights = mode_weights(n)
    if k % 2:
        weights = weights.copy()
        weights[-1] = 0.0
    power = np.abs(f.spectrum) ** 2 * f.grid.wavenumbers ** (2 * k)
    power[0] = 0.0
    return math.sqrt(f.grid.length / n ** 2 * float(np.sum(weights * power)))


def norm_profile(state: ModelState, k_max: int = 4) -> NormProfile:
    """||u||_{V^{k+1}} is taken as ||u_z||_{V^k}, which ignores the mean of u."""
    u_z = derivative(state.u)
    vk_u = [vk_norm(u_z, k) for k in range(k_max + 1)]
    vk_omega = [vk_norm(state.omega, k) for k in range(k_max + 1)]
    wk = [math.hypot(a, b) for a, b in zip(vk_u, vk_omega)]
    return NormProfile(k_max=k_max, vk_u=vk_u, vk_omega=vk_omega, wk=wk)


def w_distance(a: ModelState, b: ModelState, k: int = 1) -> float:
    """W^k distance ||u_a - u_b||_{V^{k+1}} (+) ||w_a - w_b||_{V^k}."""
    du = derivative(a.u - b.u)
    domega = a.omega - b.omega
    return math.hypot(vk_norm(du, k), vk_norm(domega, k))

# -----------------------------------------------------------------------------
# Embedding constants
# -----------------------------------------------------------------------------

def poincare_constant(length: float) -> float:
    return length / (2.0 * math.pi)


def sobolev_constant(length: float) -> float:
    """The stated L^inf embedding constant L / (2 sqrt 3)."""
    return length / (2.0 * math.sqrt(3.0))


def sharp_sobolev_constant(length: float) -> float:
    """Best constant sqrt(L/12) in ||f||_inf <= C ||f_z||_2 for zero-mean f."""
    return math.sqrt(length / 12.0)


def verify_poincare(f: Field, k: int, j: int) -> float:
    """Return c0^(k-j) ||f||_{V^k} - ||f||_{V^j} with c0 = L/(2 pi)."""
    if not k > j >= 0:
        raise ValueError(f"need k > j >= 0, got k={k}, j={j}")
    lower = vk_norm(f, j)
    if lower == 0.0:
        raise DiagnosticsError("Poincare margin is undefined for the zero field")
    return poincare_constant(f.grid.length) ** (k - j) * vk_norm(f, k) - lower


def verify_sobolev_embedding(f: Field, refine: int = 4) -> float:
    """Return (L / 2 sqrt 3) ||f_z||_{V^0} - max|f| over a refined evaluation grid."""
    require_zero_mean(f)
    if f.max_abs() == 0.0:
        raise DiagnosticsError("Sobolev margin is undefined for the zero field")
    fine = f.grid.refined(refine).points
    sup = float(np.max(np.abs(eval_at_points(f, fine))))
    return sobolev_constant(f.grid.length) * vk_norm(f, 1) - sup


def banach_algebra_ratio(f: Field, g: Field) -> float:
    """||proj0(f g)||_{V^1} / (||f||_{V^1} ||g||_{V^1}); the product's mean is removed."""
    denominator = vk_norm(f, 1) * vk_norm(g, 1)
    if denominator == 0.0:
        raise DiagnosticsError("algebra ratio is undefined when a factor is constant")
    product = f * g
    product = Field(product.grid, product.values - product.mean())
    return vk_norm(product, 1) / denominator

# -----------------------------------------------------------------------------
# Mollifiers
# -----------------------------------------------------------------------------

def mollifier_order(epsilon: float) -> int:
    """n = ceil(1/eps), the number of modes a mollifier keeps."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    return max(1, math.ceil(1.0 / epsilon - 1e-9))


def mollifier_multiplier(n_modes: int, order: int, kernel: str = "fejer") -> np.ndarray:
    """Multiplier on mode indices 0..n_modes-1; 1 at index 0, zero from index ``order`` on."""
    index = np.arange(n_modes)
    if kernel == "fejer":
        return np.maximum(0.0, 1.0 - index / order)
    if kernel == "jackson":
        half = math.ceil(order / 2)
        tent = 1.0 - np.abs(np.arange(-(half - 1), half)) / half
        profile = np.convolve(tent, tent)
        centre = 2 * half - 2
        profile = profile[centre:] / profile[centre]
        multiplier = np.zeros(n_modes)
        width = min(n_modes, profile.size)
        multiplier[:width] = profile[:width]
        return multiplier
    raise ValueError(f"unknown mollifier kernel '{kernel}', expected one of {MOLLIFIER_KERNELS}")


def mollify(f: Field, epsilon: float, kernel: str = "fejer") -> Field:
    """
    J_eps f for eps in (0, 1].

    The Fejer multiplier is max(0, 1 - |k|/n) with n = ceil(1/eps). The Jackson kernel
    (normalized Fejer squared) has the same support but deviates from 1 quadratically
    near k = 0.
    """
    require_zero_mean(f)
    order = mollifier_order(epsilon)
    multiplier = mollifier_multiplier(f.spectrum.size, order, kernel)
    spectrum = f.spectrum * multiplier
    spectrum[0] = 0.0
    return Field.from_spectrum(f.grid, spectrum, zero_mean_required=True)
