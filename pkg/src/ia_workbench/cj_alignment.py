"""Monomial beamforming bases over symbol-extended diagonal channels.

Every beamforming column is a product of interference-carrying diagonal
channels, each raised to a positive exponent, applied to the all-ones
vector. Exponents start at 1, so ``L`` channels with total degree at most
``cap`` give ``C(cap, L)`` columns.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .network import ExtendedChannels, NetworkConfig

Label = tuple[int, int, int]  # (receiver l, transmitter i, antenna r)

# largest admissible log2 magnitude of a single column entry
MAX_LOG2_MAGNITUDE = 900.0


@dataclass(frozen=True)
class MonomialBasis:
    L: int
    cap: int
    monomials: tuple[tuple[int, ...], ...]
    index: dict[tuple[int, ...], int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {a: c for c, a in enumerate(self.monomials)})

    def __len__(self) -> int:
        return len(self.monomials)

    def __getitem__(self, c: int) -> tuple[int, ...]:
        return self.monomials[c]

    @property
    def empty(self) -> bool:
        return not self.monomials

    def position(self, exponents: Sequence[int]) -> int | None:
        return self.index.get(tuple(exponents))

    def exponent_array(self) -> np.ndarray:
        return np.array(self.monomials, dtype=np.int64).reshape(len(self), self.L)


def enumerate_monomials(L: int, cap: int) -> MonomialBasis:
    """All exponent vectors in ``Z_{>=1}^L`` of degree ``<= cap``, lexicographically.

    The partial sums of a valid exponent vector form a strictly increasing
    ``L``-subset of ``1..cap`` and lexicographic order is preserved by that
    bijection, so the combinations iterator produces the basis directly.
    Returns an empty basis when ``cap < L``.
    """
    if L < 1 or cap < 1:
        raise ValueError(f"need L >= 1 and cap >= 1, got L={L}, cap={cap}")
    monos = []
    for sums in itertools.combinations(range(1, cap + 1), L):
        prev = 0
        alpha = []
        for s in sums:
            alpha.append(s - prev)
            prev = s
        monos.append(tuple(alpha))
    return MonomialBasis(L, cap, tuple(monos))


def lex_precedes(a: Sequence[int], b: Sequence[int]) -> bool:
    """True iff at the first differing position ``a`` has the smaller exponent."""
    for x, y in zip(a, b):
        if x != y:
            return x < y
    return False


def interference_channel_labels(config: NetworkConfig, served_receiver: int) -> list[Label]:
    """Channels that carry the signal meant for ``served_receiver`` to other receivers.

    Ordered by receiver, then transmitter, then antenna. There are
    ``L = M * R * (N - 1)`` of them.
    """
    if not config.is_simo:
        raise ValueError("interference channel labels are defined for SIMO networks only")
    if not 0 <= served_receiver < config.N:
        raise ValueError(f"receiver {served_receiver} out of range for N={config.N}")
    R = config.rx_antennas[0]
    return [
        (l, i, r)
        for l in range(config.N) if l != served_receiver
        for i in range(config.M)
        for r in range(R)
    ]


@dataclass(frozen=True, eq=False)
class BeamBasis:
    """``n x |basis|`` matrix whose column ``c`` is ``prod_k T_k^{alpha_k(c)} 1``."""

    matrix: np.ndarray
    basis: MonomialBasis
    channel_labels: tuple[Label, ...]
    served_receiver: int

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __len__(self) -> int:
        return len(self.basis)

    def to_dict(self) -> dict:
        return {
            "L": self.basis.L,
            "cap": self.basis.cap,
            "served_receiver": self.served_receiver,
            "labels": [list(lab) for lab in self.channel_labels],
            "exponent_rows": [list(a) for a in self.basis.monomials],
        }

    def column_bytes(self) -> bytes:
        """Row-major little-endian complex128 dump of the matrix."""
        return np.ascontiguousarray(self.matrix, dtype="<c16").tobytes()


def _check_magnitude(channels: ExtendedChannels, cap: int, n_columns: int) -> None:
    h_max = max(channels.magnitude_bounds[1], 1.0)
    log2_mag = cap * math.log2(h_max)
    if log2_mag > MAX_LOG2_MAGNITUDE:
        raise ValueError(
            f"degree cap {cap} with |h| <= {h_max} gives entries up to 2^{log2_mag:.0f}; "
            f"limit is 2^{MAX_LOG2_MAGNITUDE:.0f} (basis would be {channels.n} x {n_columns})"
        )


def _build(channels: ExtendedChannels, served_receiver: int, cap: int) -> BeamBasis:
    labels = interference_channel_labels(channels.config, served_receiver)
    L = len(labels)
    if L == 0:
        raise ValueError("a single-receiver network has no interference-carrying channels")
    basis = enumerate_monomials(L, cap)
    _check_magnitude(channels, cap, len(basis))
    exps = basis.exponent_array()
    out = np.ones((channels.n, len(basis)), dtype=complex)
    if basis.empty:
        return BeamBasis(out, basis, tuple(labels), served_receiver)
    max_exp = int(exps.max())
    for k, (l, i, r) in enumerate(labels):
        h = channels.diagonal(l, i, r)
        # powers[:, a] = h ** a by repeated multiplication, fixed order
        powers = np.empty((channels.n, max_exp + 1), dtype=complex)
        powers[:, 0] = 1.0
        for a in range(1, max_exp + 1):
            powers[:, a] = powers[:, a - 1] * h
        out *= powers[:, exps[:, k]]
    out.setflags(write=False)
    return BeamBasis(out, basis, tuple(labels), served_receiver)


def build_beam_basis(channels: ExtendedChannels, served_receiver: int, m: int) -> BeamBasis:
    """Signal basis ``V_j``: monomials of degree at most ``m``."""
    return _build(channels, served_receiver, m)


def build_interference_basis(channels: ExtendedChannels, served_receiver: int, m: int) -> BeamBasis:
    """Aligned-interference basis ``I_j``: monomials of degree at most ``m + 1``."""
    return _build(channels, served_receiver, m + 1)


def locate_image(V: BeamBasis, I: BeamBasis, label: Label, column: int) -> int | None:
    """Column of ``I`` equal to ``diag(h_label) @ V[:, column]``, found by exponent lookup.

    ``None`` if ``label`` is not one of ``V``'s interference-carrying
    channels or the incremented exponent vector is absent from ``I``.
    """
    try:
        k = V.channel_labels.index(tuple(label))
    except ValueError:
        return None
    alpha = list(V.basis[column])
    alpha[k] += 1
    return I.basis.position(alpha)


@dataclass
class AlignmentReport:
    served_receiver: int
    m: int
    n_signal: int
    n_interference: int
    checks: int = 0
    misses: list[tuple[Label, int]] = field(default_factory=list)
    max_numeric_residual: float = 0.0

    @property
    def passed(self) -> bool:
        return self.checks > 0 and not self.misses

    def to_dict(self) -> dict:
        return {
            "served_receiver": self.served_receiver,
            "m": self.m,
            "signal_dim": self.n_signal,
            "interference_dim": self.n_interference,
            "checks": self.checks,
            "misses": [[list(lab), c] for lab, c in self.misses],
            "max_numeric_residual": self.max_numeric_residual,
            "pass": self.passed,
        }


def verify_alignment(channels: ExtendedChannels, V: BeamBasis, served_receiver: int,
                     I: BeamBasis | None = None,
                     labels: Iterable[Label] | None = None) -> AlignmentReport:
    """Check ``T V_j`` is contained column-by-column in ``I_j`` for every interference channel ``T``.

    Containment is decided by exponent bookkeeping. As a cross-check the
    located column is compared numerically with the actual product and the
    worst relative deviation is reported (it only reflects rounding).
    """
    if V.served_receiver != served_receiver:
        raise ValueError(f"basis serves receiver {V.served_receiver}, not {served_receiver}")
    if V.n != channels.n:
        raise ValueError(f"basis has {V.n} rows but channels span {channels.n} uses")
    expected = tuple(interference_channel_labels(channels.config, served_receiver))
    if V.channel_labels != expected:
        raise ValueError("basis labels do not match the channel set's interference channels")
    m = V.basis.cap
    if I is None:
        I = build_interference_basis(channels, served_receiver, m)
    if I.basis.cap != m + 1 or I.channel_labels != V.channel_labels or I.n != V.n:
        raise ValueError("interference basis was not built from the same channels with cap m + 1")
    report = AlignmentReport(served_receiver, m, len(V), len(I))
    for label in (expected if labels is None else labels):
        h = channels.diagonal(*label)
        for c in range(len(V)):
            report.checks += 1
            pos = locate_image(V, I, label, c)
            if pos is None:
                report.misses.append((tuple(label), c))
                continue
            image = h * V.matrix[:, c]
            target = I.matrix[:, pos]
            resid = float(np.max(np.abs(image - target) / np.abs(target)))
            report.max_numeric_residual = max(report.max_numeric_residual, resid)
    return report
