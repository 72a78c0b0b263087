"""Downlink precoders: regularized MMSE with power-allocation coupling,
plus zero-forcing and conjugate beamforming baselines.

The MMSE precoder minimizes the mean-square error between the symbol vector
and the gain-controlled receive vector under a total transmit-energy budget
``E_tr``. Eliminating the Lagrange multiplier leaves a ridge system with
regularizer ``eps = K * sigma_w^2 / E_tr``:

    p_tilde = (conj(G) G^T + eps I)^(-1) conj(G)
    f       = sqrt(E_tr / tr(p_tilde C_s p_tilde^H))
    P       = (f / sqrt(rho_f)) * p_tilde * N^(-1)

where N is the diagonal power-allocation matrix the transmit stage applies
afterwards. The baselines keep f = 1 and leave power scaling entirely to the
allocation stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

MMSE_ITER = "MMSE_ITER"
MMSE_CONV = "MMSE_CONV"
ZF = "ZF"
CB = "CB"


@dataclass(frozen=True)
class PrecoderOutput:
    """Precoding matrix with its normalization and per-entry power loadings."""

    p: np.ndarray          # (M, K) complex
    f: float               # receive-side gain-control normalization
    scheme: str
    delta: np.ndarray      # (M, K), |p|^2


def _ridge_solve(g_hat: np.ndarray, eps: float, method: str) -> np.ndarray:
    """Solve (conj(G) G^T + eps I_M) X = conj(G) without forming an inverse.

    ``method`` picks the primal M x M factorization or the equivalent K x K
    Gram form conj(G) (G^T conj(G) + eps I_K)^(-1); "auto" uses the Gram form
    whenever M > K. Both sides are Hermitian positive definite for eps > 0.
    """
    m, k = g_hat.shape
    if method == "auto":
        method = "gram" if m > k else "primal"
    g_conj = g_hat.conj()
    if method == "primal":
        a = g_conj @ g_hat.T + eps * np.eye(m)
        return cho_solve(cho_factor(a, lower=True), g_conj)
    if method == "gram":
        a = g_hat.T @ g_conj + eps * np.eye(k)
        # want conj(G) a^(-1); a is Hermitian, so solve a X = G^T and
        # conjugate-transpose the result
        return cho_solve(cho_factor(a, lower=True), g_hat.T).conj().T
    raise ValueError(f"unknown solve method: {method!r}")


def mmse_precoder(g_hat, n_diag, e_tr: float, rho_f: float, sigma_w2: float,
                  sigma_s2: float = 1.0, method: str = "auto") -> PrecoderOutput:
    """MMSE precoder for a given diagonal power allocation.

    ``n_diag`` holds the K strictly positive diagonal entries (sqrt of the
    per-user power coefficients). The auxiliary solution and normalization f
    do not depend on it; the allocation only divides the columns, so
    ``mmse_precoder(g, n) == mmse_precoder(g, ones) / n`` columnwise.
    """
    g_hat = np.asarray(g_hat)
    n_diag = np.asarray(n_diag, dtype=float)
    if e_tr <= 0:
        raise ValueError("e_tr must be positive")
    if rho_f <= 0:
        raise ValueError("rho_f must be positive")
    if sigma_w2 < 0:
        raise ValueError("sigma_w2 must be nonnegative")
    if n_diag.ndim != 1 or n_diag.shape[0] != g_hat.shape[1]:
        raise ValueError("n_diag must hold one positive entry per user")
    if np.any(n_diag <= 0) or not np.all(np.isfinite(n_diag)):
        raise ValueError("power-allocation diagonal must be strictly positive")

    k = g_hat.shape[1]
    eps = k * sigma_w2 / e_tr
    p_tilde = _ridge_solve(g_hat, eps, method)
    f = float(np.sqrt(e_tr / (sigma_s2 * np.linalg.norm(p_tilde) ** 2)))
    p = (f / np.sqrt(rho_f)) * p_tilde
    p = p / n_diag[None, :]
    return PrecoderOutput(p=p, f=f, scheme=MMSE_ITER, delta=np.abs(p) ** 2)


def conventional_mmse_precoder(g_hat, e_tr: float, rho_f: float, sigma_w2: float,
                               sigma_s2: float = 1.0, method: str = "auto") -> PrecoderOutput:
    """MMSE precoder with identity power allocation (non-iterative baseline)."""
    out = mmse_precoder(g_hat, np.ones(np.asarray(g_hat).shape[1]), e_tr, rho_f,
                        sigma_w2, sigma_s2, method)
    return PrecoderOutput(p=out.p, f=out.f, scheme=MMSE_CONV, delta=out.delta)


def zf_precoder(g_hat, rho_f: float = 1.0) -> PrecoderOutput:
    """Zero-forcing precoder conj(G) (G^T conj(G))^(-1); interference-free
    on the estimated channel. Raises on a rank-deficient channel."""
    g_hat = np.asarray(g_hat)
    gram = g_hat.T @ g_hat.conj()
    try:
        p = cho_solve(cho_factor(gram, lower=True), g_hat.T).conj().T
    except np.linalg.LinAlgError as err:
        raise np.linalg.LinAlgError(f"rank-deficient channel: {err}") from err
    return PrecoderOutput(p=p, f=1.0, scheme=ZF, delta=np.abs(p) ** 2)


def cb_precoder(g_hat, rho_f: float = 1.0) -> PrecoderOutput:
    """Conjugate beamforming: transmit along the conjugated channel estimate."""
    p = np.asarray(g_hat).conj()
    return PrecoderOutput(p=p, f=1.0, scheme=CB, delta=np.abs(p) ** 2)
