"""Per-user access-point selection masks.

A mask is a binary (M, K) matrix with AP-block structure: all N antennas of
an AP are kept or dropped together, and every user keeps exactly S APs.
Masked channel quantities are plain Hadamard products, so selection composes
with any precoder or power-allocation stage downstream.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .channel import ChannelRealization


@dataclass(frozen=True)
class SelectionMask:
    """Binary selection matrix plus the per-user AP index lists behind it."""

    q: np.ndarray                       # (M, K) of {0.0, 1.0}
    selected: tuple                     # K tuples of AP indices

    @property
    def num_selected(self) -> int:
        return len(self.selected[0])


def _mask_from_ap_choices(choices, num_aps: int, antennas_per_ap: int) -> SelectionMask:
    k = len(choices)
    q_ap = np.zeros((num_aps, k))
    for j, aps in enumerate(choices):
        q_ap[list(aps), j] = 1.0
    return SelectionMask(q=np.repeat(q_ap, antennas_per_ap, axis=0),
                         selected=tuple(tuple(sorted(aps)) for aps in choices))


def full_mask(num_aps: int, antennas_per_ap: int, num_users: int) -> SelectionMask:
    """All-ones mask: every AP serves every user."""
    everyone = tuple(range(num_aps))
    return _mask_from_ap_choices([everyone] * num_users, num_aps, antennas_per_ap)


def ls_aps(beta, num_selected: int, antennas_per_ap: int) -> SelectionMask:
    """Keep, for each user, the S APs with the largest large-scale gain.

    Deterministic given beta; ties resolve to the lower AP index. The ranking
    only compares per-AP gains, so any positive rescaling of beta yields the
    same mask.
    """
    beta = np.asarray(beta, dtype=float)
    beta_ap = beta[::antennas_per_ap, :]               # (L, K), block representative
    num_aps, num_users = beta_ap.shape
    choices = []
    for k in range(num_users):
        order = np.argsort(-beta_ap[:, k], kind="stable")
        choices.append(tuple(int(a) for a in order[:num_selected]))
    return _mask_from_ap_choices(choices, num_aps, antennas_per_ap)


def es_aps(num_aps: int, num_users: int, num_selected: int, antennas_per_ap: int,
           evaluate: Callable[[SelectionMask], float],
           budget: int = 10 ** 6):
    """Exhaustive search over every per-user choice of S APs.

    ``evaluate`` must run the complete downstream chain (precoding, power
    allocation, SINR evaluation) for a candidate mask and return the minimum
    per-user SINR. All C(L, S)^K candidates are scored and the best mask is
    returned together with its score; ties keep the first candidate in
    lexicographic enumeration order.
    """
    per_user = math.comb(num_aps, num_selected)
    total = per_user ** num_users
    if total > budget:
        raise ValueError(
            f"exhaustive selection needs {total} candidate evaluations, "
            f"exceeding the budget of {budget}")
    best_mask = None
    best_score = -np.inf
    for choices in itertools.product(
            itertools.combinations(range(num_aps), num_selected), repeat=num_users):
        mask = _mask_from_ap_choices(choices, num_aps, antennas_per_ap)
        score = evaluate(mask)
        if score > best_score:
            best_score = score
            best_mask = mask
    return best_mask, best_score


def apply_mask(mask: SelectionMask, realization: ChannelRealization) -> ChannelRealization:
    """Hadamard-mask beta, alpha and the channel matrices; input is untouched."""
    q = mask.q
    return replace(realization,
                   beta=q * realization.beta,
                   alpha=q * realization.alpha,
                   g=q * realization.g,
                   g_hat=q * realization.g_hat,
                   g_tilde=q * realization.g_tilde)
