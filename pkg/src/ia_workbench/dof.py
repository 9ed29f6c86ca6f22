"""Closed-form sum-DoF values as exact rationals."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .network import NetworkConfig, decompose_transmitters
from .separability import choose_extension_length, smallest_admissible_m


def _positive(**kw: int) -> None:
    for name, v in kw.items():
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")


def outer_bound_simo(M: int, N: int, R: int) -> Fraction:
    """``min(M, MNR / (M + NR - R))`` for the ``M x N`` SIMO X network (and its MISO reciprocal)."""
    _positive(M=M, N=N, R=R)
    return min(Fraction(M), Fraction(M * N * R, M + N * R - R))


def mimo_x_dof(M: int, N: int, A: int) -> Fraction:
    """``A MN / (M + N - 1)`` for ``A`` antennas at every node."""
    _positive(M=M, N=N, A=A)
    return Fraction(A * M * N, M + N - 1)


def fmt(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


@dataclass(frozen=True)
class ScaleCheck:
    lhs: Fraction
    rhs: Fraction

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs

    def to_dict(self) -> dict:
        return {"lhs": fmt(self.lhs), "rhs": fmt(self.rhs), "equal": self.equal}


def scale_invariance_check(M: int, N: int, R: int, A: int) -> ScaleCheck:
    """Compare the ``A``-scaled network, decomposed at the transmitters, with ``A`` times the base.

    The scaled network has ``A`` transmit and ``AR`` receive antennas per
    node. Splitting each transmitter into ``A`` single-antenna ones gives
    the ``AM x N`` SIMO network with ``AR`` receive antennas.
    """
    _positive(M=M, N=N, R=R, A=A)
    scaled = NetworkConfig(M, N, (A,) * M, (A * R,) * N)
    split = decompose_transmitters(scaled, A)
    lhs = outer_bound_simo(split.M, split.N, split.rx_antennas[0])
    rhs = A * outer_bound_simo(M, N, R)
    return ScaleCheck(lhs, rhs)


def achieved_fraction(M: int, N: int, R: int, m: int) -> Fraction:
    """Sum-DoF ``N M |V| / n`` reached by the alignment construction at degree ``m``."""
    plan = choose_extension_length(M, N, R, m)
    return Fraction(N * M * plan.signal_dim, plan.n)


@dataclass(frozen=True)
class DofReport:
    M: int
    N: int
    R: int
    outer_bound: Fraction
    achievable_limit: Fraction
    achieved_at_m: Fraction
    m: int | None
    zero_forcing_regime: bool

    def to_dict(self) -> dict:
        return {
            "M": self.M, "N": self.N, "R": self.R, "m": self.m,
            "outer_bound": fmt(self.outer_bound),
            "achievable_limit": fmt(self.achievable_limit),
            "achieved_at_m": fmt(self.achieved_at_m),
            "zero_forcing_regime": self.zero_forcing_regime,
        }


def dof_report(M: int, N: int, R: int, m: int | None = None) -> DofReport:
    """Bounds and the finite-``m`` value for the SIMO network.

    When ``M <= R`` zero forcing attains ``M`` and no alignment is built;
    otherwise ``m`` defaults to the smallest admissible degree.
    """
    outer = outer_bound_simo(M, N, R)
    if M <= R or N == 1:
        # single-receiver or zero-forcing networks: no interference to align
        return DofReport(M, N, R, outer, outer, outer, None, M <= R)
    if m is None:
        m = smallest_admissible_m(M, N, R)
    return DofReport(M, N, R, outer, outer, achieved_fraction(M, N, R, m), m, False)
