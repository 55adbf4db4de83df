"""Benchmark schemes: cooperation on only one axis, or neither.

All three reuse the joint solver with modified inputs: communication-only
zeroes the transfer efficiencies, energy-only replaces the cluster-wide ZF
precoder with per-BS precoding over orthogonal 1/N band shares, and
no-cooperation does both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ClusterChannel, ZfGains, per_bs_zf_gains
from .energy import EnergyState
from .solver import Solution, solve_p1

SCHEME_VARIANTS = ("joint", "comm_only", "energy_only", "none")


@dataclass(frozen=True)
class SchemeId:
    """Which cooperation axes a scheme uses, plus the MT partition if any."""

    variant: str
    association: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.variant not in SCHEME_VARIANTS:
            raise ValueError(f"unknown scheme variant {self.variant!r}")
        needs_assoc = self.variant in ("energy_only", "none")
        if needs_assoc != (self.association is not None):
            raise ValueError("association is required exactly for the "
                             "per-BS schemes (energy_only, none)")


def solve_comm_only(gains: ZfGains, es: EnergyState, tol: float = 1e-9) -> Solution:
    """Cluster-wide ZF with no energy transfers (beta = 0)."""
    return solve_p1(gains, es, beta=0.0, tol=tol)


def solve_energy_only(ch: ClusterChannel, association, es: EnergyState, beta,
                      weights=None, tol: float = 1e-9) -> Solution:
    """Per-BS ZF over orthogonal 1/N band shares, with energy transfers."""
    gains = per_bs_zf_gains(ch, association, weights)
    return solve_p1(gains, es, beta=beta, tol=tol, bandwidth=1.0 / ch.n_bs)


def solve_no_coop(ch: ClusterChannel, association, es: EnergyState,
                  weights=None, tol: float = 1e-9) -> Solution:
    """Per-BS ZF, per-BS budgets, no transfers."""
    sol = solve_energy_only(ch, association, es, beta=0.0, weights=weights, tol=tol)
    assert np.all(sol.e == 0.0)
    return sol
