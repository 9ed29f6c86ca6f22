"""Signal-space matrix assembly and rank certificates for receiver-side separability.

At a receiver ``j0`` with ``R`` antennas the ``nR`` received dimensions
must hold ``M |V|`` desired columns and ``R (N-1) |I|`` aligned
interference columns. The square matrix ``F = [D | E]`` built here has full
rank exactly when desired signals are resolvable from interference.

Row labels are ``(t, r)`` (channel use, antenna) and column labels are
``("desired", i, c)`` or ``("interference", l, k, r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cj_alignment import (
    BeamBasis,
    build_beam_basis,
    build_interference_basis,
)
from .network import ExtendedChannels, NetworkConfig, draw_extended_channels

RANK_TOL = 1e-8

RowLabel = tuple[int, int]
ColLabel = tuple


@dataclass(frozen=True)
class ExtensionPlan:
    M: int
    N: int
    R: int
    m: int
    L: int
    signal_dim: int
    interference_dim: int
    n: int

    @property
    def T(self) -> int:
        """Channel uses covered by the desired-only square block."""
        return self.M * self.signal_dim // self.R

    @property
    def induction_steps(self) -> int:
        return (self.N - 1) * self.interference_dim

    def to_dict(self) -> dict:
        return {
            "M": self.M, "N": self.N, "R": self.R, "m": self.m, "L": self.L,
            "signal_dim": self.signal_dim, "interference_dim": self.interference_dim, "n": self.n,
        }


def _check_regime(M: int, N: int, R: int) -> None:
    if min(M, N, R) < 1:
        raise ValueError(f"M, N, R must be positive, got ({M}, {N}, {R})")
    if N < 2:
        raise ValueError("alignment needs at least two receivers")
    if M <= R:
        raise ValueError(f"M={M} <= R={R}: zero forcing suffices, no alignment construction")


def is_admissible(M: int, N: int, R: int, m: int) -> bool:
    L = M * R * (N - 1)
    return m >= L and (M * math.comb(m, L)) % R == 0


def smallest_admissible_m(M: int, N: int, R: int, start: int | None = None) -> int:
    """Smallest ``m >= max(start, L)`` with ``R | M * C(m, L)``."""
    _check_regime(M, N, R)
    L = M * R * (N - 1)
    m = L if start is None else max(start, L)
    # R divides C(m, L) whenever L*R divides m, so this halts
    while not is_admissible(M, N, R, m):
        m += 1
    return m


def admissible_ms(M: int, N: int, R: int, count: int, start: int | None = None) -> list[int]:
    out = []
    m = smallest_admissible_m(M, N, R, start)
    while len(out) < count:
        out.append(m)
        m = smallest_admissible_m(M, N, R, m + 1)
    return out


def choose_extension_length(M: int, N: int, R: int, m: int) -> ExtensionPlan:
    """``n = M|V|/R + (N-1)|I|`` so that ``nR = M|V| + R(N-1)|I|``."""
    _check_regime(M, N, R)
    L = M * R * (N - 1)
    if m < L:
        raise ValueError(f"m={m} is below L={L}; the smallest admissible m is "
                         f"{smallest_admissible_m(M, N, R, m)}")
    V = math.comb(m, L)
    I = math.comb(m + 1, L)
    if (M * V) % R:
        raise ValueError(f"R={R} does not divide M*|V|={M * V} at m={m}; the smallest "
                         f"admissible m is {smallest_admissible_m(M, N, R, m)}")
    n = M * V // R + (N - 1) * I
    return ExtensionPlan(M, N, R, m, L, V, I, n)


@dataclass(frozen=True, eq=False)
class Construction:
    """Channels plus every receiver's signal and interference bases at one ``m``."""

    channels: ExtendedChannels
    plan: ExtensionPlan
    signal: dict[int, BeamBasis]
    interference: dict[int, BeamBasis]


def build_construction(channels: ExtendedChannels, m: int) -> Construction:
    cfg = channels.config
    plan = choose_extension_length(cfg.M, cfg.N, channels.R, m)
    if channels.n != plan.n:
        raise ValueError(f"channels span {channels.n} uses but m={m} needs n={plan.n}")
    signal = {j: build_beam_basis(channels, j, m) for j in range(cfg.N)}
    interference = {j: build_interference_basis(channels, j, m) for j in range(cfg.N)}
    return Construction(channels, plan, signal, interference)


def draw_construction(M: int, N: int, R: int, m: int, seed: int) -> Construction:
    plan = choose_extension_length(M, N, R, m)
    channels = draw_extended_channels(NetworkConfig.simo(M, N, R), plan.n, seed)
    return build_construction(channels, m)


@dataclass(frozen=True, eq=False)
class SignalSpaceMatrix:
    F: np.ndarray
    row_labels: tuple[RowLabel, ...]
    col_labels: tuple[ColLabel, ...]
    receiver: int
    plan: ExtensionPlan

    @property
    def shape(self) -> tuple[int, int]:
        return self.F.shape

    def block(self, kind: str, node: int | None = None) -> np.ndarray:
        cols = [c for c, lab in enumerate(self.col_labels)
                if lab[0] == kind and (node is None or lab[1] == node)]
        return self.F[:, cols]

    def natural_form(self) -> tuple[np.ndarray, list[int], list[int]]:
        """Antenna-major rows, columns ``[D | I_R (x) I_l for l != receiver]``.

        Returns the matrix and the row and column permutations that map
        this object's ``F`` onto it (``natural = F[rows][:, cols]``).
        """
        R, n = self.plan.R, self.plan.n
        row_pos = {lab: p for p, lab in enumerate(self.row_labels)}
        col_pos = {lab: p for p, lab in enumerate(self.col_labels)}
        rows = [row_pos[t, r] for r in range(R) for t in range(n)]
        cols = [col_pos[lab] for lab in self.col_labels if lab[0] == "desired"]
        others = sorted({lab[1] for lab in self.col_labels if lab[0] == "interference"})
        for l in others:
            cols += [col_pos["interference", l, k, r]
                     for r in range(R) for k in range(self.plan.interference_dim)]
        return self.F[np.ix_(rows, cols)], rows, cols


def assemble_F(construction: Construction, receiver: int = 0) -> SignalSpaceMatrix:
    """``nR x nR`` signal-space matrix at ``receiver``; rows grouped by channel use."""
    ch, plan = construction.channels, construction.plan
    M, N, R, n = plan.M, plan.N, plan.R, plan.n
    V = construction.signal[receiver].matrix
    nV = V.shape[1]
    for j, basis in list(construction.signal.items()) + list(construction.interference.items()):
        if basis.n != n:
            raise ValueError(f"basis for receiver {j} has {basis.n} rows, expected n={n}")
    F = np.zeros((n * R, n * R), dtype=complex)
    rows = tuple((t, r) for t in range(n) for r in range(R))
    cols: list[ColLabel] = []
    for i in range(M):
        for r in range(R):
            F[r::R, i * nV:(i + 1) * nV] = ch.diagonal(receiver, i, r)[:, None] * V
        cols += [("desired", i, c) for c in range(nV)]
    off = M * nV
    for l in range(N):
        if l == receiver:
            continue
        Il = construction.interference[l].matrix
        for k in range(Il.shape[1]):
            for r in range(R):
                F[r::R, off] = Il[:, k]
                cols.append(("interference", l, k, r))
                off += 1
    if off != n * R:
        raise ValueError(f"column count {off} differs from nR={n * R}")
    F.setflags(write=False)
    return SignalSpaceMatrix(F, rows, tuple(cols), receiver, plan)


@dataclass(frozen=True)
class RankCertificate:
    full_rank: bool
    sigma_min: float
    sigma_max: float
    tol_rel: float

    @property
    def ratio(self) -> float:
        return self.sigma_min / self.sigma_max if self.sigma_max > 0 else 0.0

    def to_dict(self) -> dict:
        return {"full_rank": self.full_rank, "sigma_min": self.sigma_min,
                "sigma_max": self.sigma_max, "ratio": self.ratio}


def rank_certificate(F, tol_rel: float = RANK_TOL) -> RankCertificate:
    """Full rank iff ``sigma_min / sigma_max > tol_rel`` (SVD singular values)."""
    A = F.F if isinstance(F, SignalSpaceMatrix) else np.asarray(F)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"rank certificate needs a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if A.size == 0:
        return RankCertificate(True, 0.0, 0.0, tol_rel)
    s = np.linalg.svd(A, compute_uv=False)
    smax, smin = float(s[0]), float(s[-1])
    return RankCertificate(smax > 0 and smin / smax > tol_rel, smin, smax, tol_rel)


@dataclass
class Step1Report:
    passed: bool
    block_diagonal: bool
    signal_basis_unchanged: bool
    block_certificates: list[RankCertificate] = field(default_factory=list)
    unspecialized: RankCertificate | None = None

    def __bool__(self) -> bool:
        return self.passed


def desired_square_block(construction: Construction, receiver: int = 0,
                         channels: ExtendedChannels | None = None) -> np.ndarray:
    """``M|V| x M|V|`` desired-only block over the first ``T = M|V|/R`` uses, antenna-major rows."""
    plan = construction.plan
    ch = construction.channels if channels is None else channels
    V = construction.signal[receiver].matrix[: plan.T]
    nV = V.shape[1]
    out = np.zeros((plan.R * plan.T, plan.M * nV), dtype=complex)
    for r in range(plan.R):
        for i in range(plan.M):
            out[r * plan.T:(r + 1) * plan.T, i * nV:(i + 1) * nV] = (
                ch.diagonal(receiver, i, r)[: plan.T, None] * V)
    return out


def step1_specialization_check(construction: Construction, receiver: int = 0,
                               tol_rel: float = RANK_TOL) -> Step1Report:
    """Desired signals are independent: specialize ``D-bar`` to block-diagonal form.

    A separate realization zeroes the desired-channel gains of transmitter
    ``i`` everywhere except on rows ``i|V| .. (i+1)|V| - 1`` of ``D-bar``.
    The signal basis does not involve desired channels, so it is unchanged;
    the specialized ``D-bar`` is then block diagonal with ``|V| x |V|``
    blocks that are each checked for full rank.
    """
    plan = construction.plan
    if plan.M <= plan.R:
        raise ValueError(f"specialization needs R < M, got M={plan.M}, R={plan.R}")
    ch = construction.channels
    nV, T = plan.signal_dim, plan.T
    keep = np.ones(ch.coeffs.shape, dtype=bool)
    for i in range(plan.M):
        keep[receiver, i] = False
        for row in range(i * nV, (i + 1) * nV):
            r, t = divmod(row, T)
            keep[receiver, i, r, t] = True
    special = ch.masked(keep)

    rebuilt = build_beam_basis(special, receiver, plan.m)
    same_basis = bool(np.array_equal(rebuilt.matrix, construction.signal[receiver].matrix))

    Dbar = desired_square_block(construction, receiver, special)
    off_diag = Dbar.copy()
    blocks = []
    for i in range(plan.M):
        sl = slice(i * nV, (i + 1) * nV)
        blocks.append(rank_certificate(Dbar[sl, sl], tol_rel))
        off_diag[sl, sl] = 0
    block_diag = not np.any(off_diag)
    full = rank_certificate(desired_square_block(construction, receiver), tol_rel)
    passed = same_basis and block_diag and all(b.full_rank for b in blocks)
    return Step1Report(passed, block_diag, same_basis, blocks, full)


@dataclass
class InductionStep:
    kappa: int
    receiver_l: int
    column_k: int
    certificate: RankCertificate

    @property
    def full_rank(self) -> bool:
        return self.certificate.full_rank


@dataclass
class InductionTrace:
    base: RankCertificate
    steps: list[InductionStep]
    row_permutation: list[int]
    col_permutation: list[int]
    matches_direct: bool

    @property
    def all_full_rank(self) -> bool:
        return self.base.full_rank and all(s.full_rank for s in self.steps)

    def to_rows(self) -> list[dict]:
        return [{"kappa": s.kappa, "l": s.receiver_l, "k": s.column_k,
                 "full_rank": s.full_rank, "ratio": s.certificate.ratio} for s in self.steps]


def step2_induction_trace(construction: Construction, receiver: int = 0,
                          tol_rel: float = RANK_TOL,
                          zero_steps: frozenset[int] | set[int] = frozenset()) -> InductionTrace:
    """Grow ``G(kappa)`` from ``D-bar`` by ``R`` rows and ``R`` columns per step.

    Step ``kappa`` (1-based) appends the rows of channel use ``T + kappa``
    and the columns ``I_{lk} (x) I_R`` of the next aligned-interference
    direction. The final ``G`` is compared exactly with :func:`assemble_F`
    after matching row and column labels. Steps listed in ``zero_steps``
    have their appended columns replaced with zeros.
    """
    plan = construction.plan
    ch = construction.channels
    M, R, T = plan.M, plan.R, plan.T
    nI = plan.interference_dim
    V = construction.signal[receiver].matrix
    eye = np.eye(R)
    others = [l for l in range(plan.N) if l != receiver]

    def desired_rows(t: int) -> np.ndarray:
        # R x M gain matrix at channel use t, Kronecker row-expanded by V(t)
        Ht = np.array([[ch.coeff(receiver, i, r, t) for i in range(M)] for r in range(R)])
        return np.kron(Ht, V[t:t + 1])

    G = np.vstack([desired_rows(t) for t in range(T)])
    rows: list[RowLabel] = [(t, r) for t in range(T) for r in range(R)]
    cols: list[ColLabel] = [("desired", i, c) for i in range(M) for c in range(plan.signal_dim)]
    base = rank_certificate(G, tol_rel)
    zeroed: set[tuple[int, int]] = set()
    steps = []
    for kappa in range(1, plan.induction_steps + 1):
        l = others[(kappa - 1) // nI]
        k = (kappa - 1) % nI
        t_new = T + kappa - 1
        Il = construction.interference[l].matrix
        if kappa in zero_steps:
            zeroed.add((l, k))
        scale = 0.0 if (l, k) in zeroed else 1.0
        B = scale * np.kron(Il[:t_new, k:k + 1], eye)
        # C(kappa): new channel use against all existing columns
        C_parts = [desired_rows(t_new)]
        done = [(ll, kk) for ll in others for kk in range(nI)][: kappa - 1]
        for ll, kk in done:
            s = 0.0 if (ll, kk) in zeroed else 1.0
            C_parts.append(s * construction.interference[ll].matrix[t_new, kk] * eye)
        C = np.hstack(C_parts)
        corner = scale * Il[t_new, k] * eye
        G = np.block([[G, B], [C, corner]])
        rows += [(t_new, r) for r in range(R)]
        cols += [("interference", l, k, r) for r in range(R)]
        steps.append(InductionStep(kappa, l, k, rank_certificate(G, tol_rel)))

    direct = assemble_F(construction, receiver)
    row_pos = {lab: p for p, lab in enumerate(direct.row_labels)}
    col_pos = {lab: p for p, lab in enumerate(direct.col_labels)}
    row_perm = [row_pos[lab] for lab in rows]
    col_perm = [col_pos[lab] for lab in cols]
    matches = (not zero_steps and G.shape == direct.shape
               and bool(np.array_equal(G, direct.F[np.ix_(row_perm, col_perm)])))
    if not zero_steps and not matches:
        raise RuntimeError("incremental G does not reproduce the directly assembled F")
    return InductionTrace(base, steps, row_perm, col_perm, matches)


@dataclass
class SeparabilityResult:
    seed: int
    plan: ExtensionPlan
    certificate: RankCertificate

    @property
    def passed(self) -> bool:
        return self.certificate.full_rank

    def to_dict(self) -> dict:
        p = self.plan
        return {
            "config": {"M": p.M, "N": p.N, "R": p.R},
            "m": p.m,
            "n": p.n,
            "counts": {"L": p.L, "signal_dim": p.signal_dim,
                       "interference_dim": p.interference_dim, "columns": p.n * p.R},
            "sigma_min": self.certificate.sigma_min,
            "sigma_max": self.certificate.sigma_max,
            "pass": self.passed,
            "seed": self.seed,
        }


def verify_separability(M: int, N: int, R: int, m: int, seed: int,
                        tol_rel: float = RANK_TOL, receiver: int = 0) -> SeparabilityResult:
    """One Monte-Carlo trial: draw channels, build bases, certify ``F`` at ``receiver``."""
    con = draw_construction(M, N, R, m, seed)
    return SeparabilityResult(seed, con.plan, rank_certificate(assemble_F(con, receiver), tol_rel))
