"""Properness counting and an alternating-minimization solver for spatial IA in X networks.

A linear IA solution assigns each message ``(j, i)`` (transmitter ``i`` to
receiver ``j``) a precoder ``V[j, i]`` of shape ``A_i x d_ji`` and each
receiver a combiner ``U[j]`` of shape ``B_j x sum_i d_ji`` such that

* ``U[k]^H H[k, i] V[j, i] = 0`` for every ``k != j`` (zero leakage), and
* ``U[j]^H [H[j, 1] V[j, 1], ..., H[j, M] V[j, M]]`` has full rank.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from ._parallel import map_ordered
from .network import NetworkConfig, SpatialChannels

log = logging.getLogger(__name__)

LEAK_TOL = 1e-9
RANK_TOL = 1e-8
PLATEAU_WINDOW = 50
PLATEAU_REL = 1e-6
MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class DofDemand:
    """``d[j][i]`` streams from transmitter ``i`` to receiver ``j`` (an ``N x M`` table)."""

    d: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.d)
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError("demand must be a non-empty rectangular N x M table")
        if any(x < 0 for row in rows for x in row):
            raise ValueError("stream counts must be nonnegative")
        object.__setattr__(self, "d", rows)

    @classmethod
    def symmetric(cls, M: int, N: int, d: int) -> "DofDemand":
        return cls(tuple((d,) * M for _ in range(N)))

    @property
    def N(self) -> int:
        return len(self.d)

    @property
    def M(self) -> int:
        return len(self.d[0])

    def __getitem__(self, key: tuple[int, int]) -> int:
        j, i = key
        return self.d[j][i]

    def rx_total(self, j: int) -> int:
        return sum(self.d[j])

    def tx_total(self, i: int) -> int:
        return sum(row[i] for row in self.d)

    @property
    def total(self) -> int:
        return sum(map(sum, self.d))

    def symmetric_value(self) -> int | None:
        vals = {x for row in self.d for x in row}
        return vals.pop() if len(vals) == 1 else None

    def validate(self, config: NetworkConfig) -> None:
        if (self.N, self.M) != (config.N, config.M):
            raise ValueError(f"demand is {self.N} x {self.M} but the network is "
                             f"{config.N} receivers x {config.M} transmitters")
        for j in range(self.N):
            if self.rx_total(j) > config.rx_antennas[j]:
                raise ValueError(f"receiver {j} is asked for {self.rx_total(j)} streams "
                                 f"with only {config.rx_antennas[j]} antennas")
        for i in range(self.M):
            if self.tx_total(i) > config.tx_antennas[i]:
                raise ValueError(f"transmitter {i} is asked for {self.tx_total(i)} streams "
                                 f"with only {config.tx_antennas[i]} antennas")

    def to_list(self) -> list[list[int]]:
        return [list(row) for row in self.d]


def count_equations(config: NetworkConfig, demand: DofDemand) -> int:
    """Scalar zero-leakage equations: ``sum_k (sum_i d_ki)(sum_{j != k} sum_i d_ji)``."""
    demand.validate(config)
    total = demand.total
    return sum(demand.rx_total(k) * (total - demand.rx_total(k)) for k in range(config.N))


def count_variables(config: NetworkConfig, demand: DofDemand) -> int:
    """Free filter entries once the invertible row transforms are factored out."""
    demand.validate(config)
    tx = sum((config.tx_antennas[i] - demand[j, i]) * demand[j, i]
             for j in range(config.N) for i in range(config.M))
    rx = sum((config.rx_antennas[j] - demand.rx_total(j)) * demand.rx_total(j)
             for j in range(config.N))
    return tx + rx


class SymmetricBound(NamedTuple):
    value: Fraction
    max_d: int


def symmetric_bound(M: int, N: int, A: int, B: int) -> SymmetricBound:
    """Largest symmetric ``d`` a proper system allows: ``(A + B) / (MN + 1)`` and its floor."""
    for name, v in (("M", M), ("N", N), ("A", A), ("B", B)):
        if v < 1:
            raise ValueError(f"{name} must be positive, got {v}")
    value = Fraction(A + B, M * N + 1)
    return SymmetricBound(value, value.numerator // value.denominator)


@dataclass(frozen=True)
class PropernessReport:
    N_e: int
    N_v: int
    symmetric_bound: Fraction | None = None

    @property
    def proper(self) -> bool:
        return self.N_e <= self.N_v

    def to_dict(self) -> dict:
        out = {"N_e": self.N_e, "N_v": self.N_v, "proper": self.proper}
        if self.symmetric_bound is not None:
            b = self.symmetric_bound
            out["symmetric_bound"] = f"{b.numerator}/{b.denominator}" if b.denominator != 1 else str(b.numerator)
        return out


def properness(config: NetworkConfig, demand: DofDemand) -> PropernessReport:
    bound = None
    if demand.symmetric_value() is not None and len(set(config.tx_antennas)) == 1 \
            and len(set(config.rx_antennas)) == 1:
        bound = symmetric_bound(config.M, config.N, config.tx_antennas[0], config.rx_antennas[0]).value
    return PropernessReport(count_equations(config, demand), count_variables(config, demand), bound)


@dataclass(frozen=True, eq=False)
class IASolution:
    V: dict[tuple[int, int], np.ndarray]
    U: dict[int, np.ndarray]

    def reciprocal_filters(self, demand: DofDemand):
        """Reciprocal precoders split from ``U[j]`` and combiners stacked from ``V[., i]``.

        Returns ``(Vt, Ut)`` with ``Vt[i, j]`` the ``B_j x d_ji`` slice of
        ``U[j]`` and ``Ut[i] = [V[0, i], ..., V[N-1, i]]``.
        """
        Vt = {}
        for j, Uj in self.U.items():
            start = 0
            for i in range(demand.M):
                Vt[i, j] = Uj[:, start:start + demand[j, i]]
                start += demand[j, i]
        Ut = {i: np.hstack([self.V[j, i] for j in range(demand.N)]) for i in range(demand.M)}
        return Vt, Ut

    def to_dict(self) -> dict:
        def enc(a):
            return [[[z.real, z.imag] for z in row] for row in a.tolist()]
        return {"V": {f"{j}/{i}": enc(v) for (j, i), v in self.V.items()},
                "U": {str(j): enc(u) for j, u in self.U.items()}}


def leakage(channels: SpatialChannels, sol: IASolution, demand: DofDemand) -> float:
    """Total interference power ``sum ||U[k]^H H[k, i] V[j, i]||^2`` over ``k != j``."""
    cfg = channels.config
    total = 0.0
    for k in range(cfg.N):
        for i in range(cfg.M):
            G = sol.U[k].conj().T @ channels[k, i]
            for j in range(cfg.N):
                if j != k:
                    total += float(np.linalg.norm(G @ sol.V[j, i]) ** 2)
    return total


def desired_power(channels: SpatialChannels, sol: IASolution, demand: DofDemand) -> float:
    cfg = channels.config
    return float(sum(np.linalg.norm(sol.U[j].conj().T @ channels[j, i] @ sol.V[j, i]) ** 2
                     for j in range(cfg.N) for i in range(cfg.M)))


def normalized_leakage(channels: SpatialChannels, sol: IASolution, demand: DofDemand) -> float:
    leak = leakage(channels, sol, demand)
    if leak == 0.0:
        return 0.0
    power = desired_power(channels, sol, demand)
    return leak / power if power > 0 else float("inf")


def reciprocal_leakage(channels: SpatialChannels, sol: IASolution, demand: DofDemand) -> float:
    """Leakage of the reciprocal network under the reciprocal filters.

    Reciprocal receiver ``i`` decodes the message from transmitter ``k`` on
    block ``V[k, i]`` of ``Ut[i]``; every other block ``V[j, i]`` must null
    transmitter ``k`` entirely. The sum is
    ``sum ||V[j, i]^H Ht[i, k] [Vt[0, k], ..., Vt[M-1, k]]||^2`` over ``j != k``,
    which equals :func:`leakage` for any filters, not only aligned ones.
    """
    rch = channels.reciprocal()
    Vt, _ = sol.reciprocal_filters(demand)
    total = 0.0
    for i in range(demand.M):
        for k in range(demand.N):
            X = rch[i, k] @ np.hstack([Vt[l, k] for l in range(demand.M)])
            for j in range(demand.N):
                if j != k:
                    total += float(np.linalg.norm(sol.V[j, i].conj().T @ X) ** 2)
    return total


def check_rank_conditions(channels: SpatialChannels, sol: IASolution, demand: DofDemand,
                          tol_rel: float = RANK_TOL) -> list[bool]:
    """Per receiver: does the filtered desired-signal matrix have rank ``sum_i d_ji``?"""
    cfg = channels.config
    flags = []
    for j in range(cfg.N):
        want = demand.rx_total(j)
        if want == 0:
            flags.append(True)
            continue
        S = sol.U[j].conj().T @ np.hstack([channels[j, i] @ sol.V[j, i] for i in range(cfg.M)])
        s = np.linalg.svd(S, compute_uv=False)
        rank = int(np.sum(s > tol_rel * s[0])) if s.size and s[0] > 0 else 0
        flags.append(rank == want)
    return flags


def _least_eigvecs(Q: np.ndarray, count: int) -> np.ndarray:
    _, vecs = np.linalg.eigh((Q + Q.conj().T) / 2)
    return vecs[:, :count]


def _update_combiners(channels: SpatialChannels, V, demand: DofDemand) -> dict[int, np.ndarray]:
    cfg = channels.config
    U = {}
    for j in range(cfg.N):
        B = cfg.rx_antennas[j]
        Q = np.zeros((B, B), dtype=complex)
        for i in range(cfg.M):
            for k in range(cfg.N):
                if k != j:
                    X = channels[j, i] @ V[k, i]
                    Q += X @ X.conj().T
        U[j] = _least_eigvecs(Q, demand.rx_total(j))
    return U


def _update_precoders(channels: SpatialChannels, U, demand: DofDemand) -> dict[tuple[int, int], np.ndarray]:
    # V[k, i] is the reciprocal receiver filter at original transmitter i for the
    # stream from original receiver k; it rejects every split of U[j], j != k
    cfg = channels.config
    V = {}
    for i in range(cfg.M):
        A = cfg.tx_antennas[i]
        per_rx = []
        for j in range(cfg.N):
            X = channels[j, i].conj().T @ U[j]
            per_rx.append(X @ X.conj().T)
        total = sum(per_rx, np.zeros((A, A), dtype=complex))
        for k in range(cfg.N):
            V[k, i] = _least_eigvecs(total - per_rx[k], demand[k, i])
    return V


def _random_orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    X = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, _ = np.linalg.qr(X)
    return q[:, :cols]


class Verdict(str, Enum):
    FEASIBLE_EVIDENCE = "FEASIBLE_EVIDENCE"
    INFEASIBLE_EVIDENCE = "INFEASIBLE_EVIDENCE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class RestartRun:
    restart: int
    leakage: list[float]
    normalized: list[float]
    status: str  # "converged", "plateau" or "max_iters"
    rank_ok: list[bool]
    solution: IASolution = field(repr=False)

    @property
    def final(self) -> float:
        return self.normalized[-1]

    @property
    def feasible(self) -> bool:
        return self.status == "converged" and all(self.rank_ok)


@dataclass
class LeakageTrace:
    runs: list[RestartRun]

    def leakage(self, restart: int) -> list[float]:
        return self.runs[restart].leakage

    def is_monotone(self, slack: float = MONOTONE_SLACK) -> bool:
        return all(b <= a + slack for run in self.runs
                   for a, b in zip(run.leakage, run.leakage[1:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["restart", "iteration", "leakage", "normalized_leakage"])
        for run in sorted(self.runs, key=lambda r: r.restart):
            for it, (raw, norm) in enumerate(zip(run.leakage, run.normalized)):
                w.writerow([run.restart, it, repr(raw), repr(norm)])
        return buf.getvalue()


@dataclass
class IAResult:
    solution: IASolution
    trace: LeakageTrace
    verdict: Verdict
    best_restart: int

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "best_restart": self.best_restart,
            "restarts": [
                {"restart": r.restart, "status": r.status, "iterations": len(r.leakage) - 1,
                 "final_leakage": r.leakage[-1], "final_normalized_leakage": r.final,
                 "rank_conditions": r.rank_ok}
                for r in self.trace.runs
            ],
        }


def _run_restart(channels: SpatialChannels, demand: DofDemand, seed: int, restart: int,
                 max_iters: int, leak_tol: float) -> RestartRun:
    cfg = channels.config
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(restart,))))
    V = {(j, i): _random_orthonormal(rng, cfg.tx_antennas[i], demand[j, i])
         for j in range(cfg.N) for i in range(cfg.M)}
    U = _update_combiners(channels, V, demand)
    sol = IASolution(V, U)
    raw = [leakage(channels, sol, demand)]
    norm = [normalized_leakage(channels, sol, demand)]
    status = "converged" if max(raw[0], norm[0]) < leak_tol else "max_iters"
    it = 0
    while status == "max_iters" and it < max_iters:
        it += 1
        V = _update_precoders(channels, U, demand)
        U = _update_combiners(channels, V, demand)
        sol = IASolution(V, U)
        raw.append(leakage(channels, sol, demand))
        norm.append(normalized_leakage(channels, sol, demand))
        if max(raw[-1], norm[-1]) < leak_tol:
            status = "converged"
        elif it >= PLATEAU_WINDOW and \
                raw[-1 - PLATEAU_WINDOW] - raw[-1] < PLATEAU_REL * raw[-1 - PLATEAU_WINDOW]:
            status = "plateau"
    rank_ok = check_rank_conditions(channels, sol, demand)
    log.debug("restart %d: %s after %d iterations, leakage %.3e", restart, status, it, norm[-1])
    return RestartRun(restart, raw, norm, status, rank_ok, sol)


def solve_spatial_ia(channels: SpatialChannels, demand: DofDemand, max_iters: int = 2000,
                     leak_tol: float = LEAK_TOL, restarts: int = 5, seed: int = 0) -> IAResult:
    """Alternate combiner and precoder updates that each minimize leakage exactly.

    Combiners take the least-dominant eigenvectors of each receiver's
    interference covariance. Precoders are updated in the reciprocal
    network, where ``U[j]`` splits into per-message precoders and
    ``V[k, i]`` becomes the receive filter at reciprocal receiver ``i`` for
    the stream from reciprocal transmitter ``k``. A restart stops when both
    its raw leakage and its leakage normalized by the desired-signal power
    drop below ``leak_tol``, or when its leakage improves by less than a relative 1e-6
    over 50 iterations.
    """
    demand.validate(channels.config)
    if restarts < 1 or max_iters < 0:
        raise ValueError("need restarts >= 1 and max_iters >= 0")
    runs = map_ordered(lambda r: _run_restart(channels, demand, seed, r, max_iters, leak_tol),
                       range(restarts))
    feasible = [r for r in runs if r.feasible]
    if feasible:
        verdict, best = Verdict.FEASIBLE_EVIDENCE, feasible[0]
    else:
        best = min(runs, key=lambda r: r.final)
        if all(r.status == "plateau" for r in runs):
            verdict = Verdict.INFEASIBLE_EVIDENCE
        else:
            verdict = Verdict.INCONCLUSIVE
    return IAResult(best.solution, LeakageTrace(runs), verdict, best.restart)
