"""Closed-form SINR/rate evaluation, the SNR-to-transmit-power mapping and
uncoded QPSK bit-error-rate measurement.

The per-user SINR under a precoder P and power coefficients eta decomposes
into three quadratic coefficient sets computed from the (masked) channel
estimate and the CSI-error variances:

    psi_k      = |g_hat_k^T p_k|^2                    desired signal
    phi_{k,i}  = |g_hat_k^T p_i|^2                    inter-user interference
    gamma_{k,i}= sum_m err_var_{m,k} |p_{m,i}|^2      CSI-error leakage

    SINR_k = rho_f eta_k psi_k /
             (sigma_w^2 + rho_f sum_{i != k} eta_i phi_{k,i}
                        + rho_f sum_i eta_i gamma_{k,i})
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class SinrCoefficients:
    """Quadratic SINR building blocks; every entry is nonnegative."""

    psi: np.ndarray       # (K,)
    phi: np.ndarray       # (K, K), diagonal unused
    gamma: np.ndarray     # (K, K)
    rho_f: float
    sigma_w2: float


@dataclass
class LinkMetrics:
    per_user_sinr: np.ndarray     # (K,) linear
    per_user_rate: np.ndarray     # (K,) bits/s/Hz
    sum_rate: float
    min_sinr: float
    ber: Optional[float] = None


def sinr_coefficients(p, g_hat, err_var, rho_f: float, sigma_w2: float) -> SinrCoefficients:
    """Coefficients (psi, phi, gamma) for the closed-form SINR.

    ``err_var`` is the (M, K) per-entry CSI-error variance, `(1 - n) * beta`
    after masking; with perfect CSI it is zero and gamma vanishes.
    """
    p = np.asarray(p)
    g_hat = np.asarray(g_hat)
    err_var = np.asarray(err_var, dtype=float)
    effective = g_hat.T @ p                   # (K, K): row k = g_hat_k^T P
    phi = np.abs(effective) ** 2
    psi = np.diag(phi).copy()
    gamma = err_var.T @ (np.abs(p) ** 2)      # (K, K): [k, i] couples user i into k
    return SinrCoefficients(psi=psi, phi=phi, gamma=gamma,
                            rho_f=float(rho_f), sigma_w2=float(sigma_w2))


def analytic_sinr(coeffs: SinrCoefficients, eta) -> np.ndarray:
    """Per-user SINR (linear) for power coefficients eta >= 0."""
    eta = np.asarray(eta, dtype=float)
    phi_cross = coeffs.phi - np.diag(np.diag(coeffs.phi))
    interference = coeffs.rho_f * (phi_cross @ eta)
    csi_leak = coeffs.rho_f * (coeffs.gamma @ eta)
    signal = coeffs.rho_f * eta * coeffs.psi
    return signal / (coeffs.sigma_w2 + interference + csi_leak)


def rates(per_user_sinr, ber: Optional[float] = None) -> LinkMetrics:
    """Achievable rates log2(1 + SINR) and their aggregates."""
    sinr = np.asarray(per_user_sinr, dtype=float)
    rate = np.log2(1.0 + sinr)
    return LinkMetrics(per_user_sinr=sinr, per_user_rate=rate,
                       sum_rate=float(np.sum(rate)), min_sinr=float(np.min(sinr)),
                       ber=ber)


def snr_to_rho_f(snr_linear: float, g_hat, sigma_w2: float) -> float:
    """Per-antenna power scale rho_f = SNR * K * sigma_w^2 / tr(G_hat G_hat^H).

    The trace normalizes out the aggregate channel gain so the SNR grid is
    comparable across topologies; the inverse mapping
    snr = rho_f * tr(G_hat G_hat^H) / (K * sigma_w^2) round-trips exactly.
    """
    g_hat = np.asarray(g_hat)
    trace = float(np.linalg.norm(g_hat) ** 2)
    if trace == 0.0:
        raise ValueError("channel estimate is identically zero")
    k = g_hat.shape[1]
    return float(snr_linear) * k * sigma_w2 / trace


def ber_qpsk(p, n_diag, g, g_hat, rho_f: float, sigma_w2: float,
             symbols_per_packet: int, rng: np.random.Generator,
             packets: int = 1, noise_rng: Optional[np.random.Generator] = None):
    """Uncoded Gray-QPSK bit error rate over the true channel.

    Transmits ``x = sqrt(rho_f) P N s`` through ``g`` with additive noise of
    variance sigma_w2 per user. Each receiver divides by its known effective
    gain ``a_k = sqrt(rho_f) g_hat_k^T p_k sqrt(eta_k)`` and slices to the
    nearest constellation point. Users whose gain magnitude falls below
    1e-12 cannot decode; their bits count as random (0.5 error rate).

    Bits come from ``rng``; noise comes from ``noise_rng`` (default: the
    same stream), so the two can be frozen independently.

    Returns (ber, num_degenerate_gains).
    """
    p = np.asarray(p)
    n_diag = np.asarray(n_diag, dtype=float)
    g = np.asarray(g)
    g_hat = np.asarray(g_hat)
    if noise_rng is None:
        noise_rng = rng
    k = p.shape[1]

    gains = np.sqrt(rho_f) * np.einsum("mk,mk->k", g_hat, p) * n_diag
    degenerate = np.abs(gains) < 1e-12
    safe_gains = np.where(degenerate, 1.0, gains)

    total_bits = 0
    error_bits = 0.0
    for _ in range(packets):
        bits = rng.integers(0, 2, size=(2, k, symbols_per_packet))
        s = ((1.0 - 2.0 * bits[0]) + 1j * (1.0 - 2.0 * bits[1])) / np.sqrt(2.0)
        x = np.sqrt(rho_f) * (p * n_diag[None, :]) @ s
        noise_scale = np.sqrt(sigma_w2 / 2.0)
        w = noise_scale * (noise_rng.standard_normal((k, symbols_per_packet))
                           + 1j * noise_rng.standard_normal((k, symbols_per_packet)))
        y = g.T @ x + w
        s_hat = y / safe_gains[:, None]
        wrong = np.empty((2, k, symbols_per_packet), dtype=float)
        wrong[0] = (s_hat.real < 0) != (bits[0] == 1)
        wrong[1] = (s_hat.imag < 0) != (bits[1] == 1)
        wrong[:, degenerate, :] = 0.5
        total_bits += 2 * k * symbols_per_packet
        error_bits += float(np.sum(wrong))
    return error_bits / total_bits, int(np.sum(degenerate))
