"""X-network configurations and generic channel draws.

Indices are zero-based everywhere: receiver ``j`` in ``range(N)``,
transmitter ``i`` in ``range(M)``, receive antenna ``r`` in ``range(R)`` and
channel use ``t`` in ``range(n)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

H_MIN = 0.5
H_MAX = 2.0

# first element of every spawn key, keeps the two channel families apart
_EXTENDED_STREAM = 0
_SPATIAL_STREAM = 1


@dataclass(frozen=True)
class NetworkConfig:
    """An ``M x N`` X network: ``M`` transmitters, ``N`` receivers."""

    M: int
    N: int
    tx_antennas: tuple[int, ...]
    rx_antennas: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tx_antennas", tuple(int(a) for a in self.tx_antennas))
        object.__setattr__(self, "rx_antennas", tuple(int(b) for b in self.rx_antennas))
        if self.M < 1 or self.N < 1:
            raise ValueError(f"need M >= 1 and N >= 1, got M={self.M}, N={self.N}")
        if len(self.tx_antennas) != self.M:
            raise ValueError(f"expected {self.M} tx antenna counts, got {len(self.tx_antennas)}")
        if len(self.rx_antennas) != self.N:
            raise ValueError(f"expected {self.N} rx antenna counts, got {len(self.rx_antennas)}")
        for name, counts in (("tx", self.tx_antennas), ("rx", self.rx_antennas)):
            for idx, c in enumerate(counts):
                if c < 1:
                    raise ValueError(f"{name} node {idx} has {c} antennas; need >= 1")

    @classmethod
    def symmetric(cls, M: int, N: int, A: int, B: int | None = None) -> "NetworkConfig":
        """``A`` antennas at every transmitter and ``B`` (default ``A``) at every receiver."""
        return cls(M, N, (A,) * M, ((A if B is None else B),) * N)

    @classmethod
    def simo(cls, M: int, N: int, R: int) -> "NetworkConfig":
        return cls(M, N, (1,) * M, (R,) * N)

    def is_symmetric(self, A: int | None = None) -> bool:
        counts = set(self.tx_antennas) | set(self.rx_antennas)
        if len(counts) != 1:
            return False
        return A is None or counts == {A}

    @property
    def is_simo(self) -> bool:
        return all(a == 1 for a in self.tx_antennas) and len(set(self.rx_antennas)) == 1

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "N": self.N,
            "tx_antennas": list(self.tx_antennas),
            "rx_antennas": list(self.rx_antennas),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        missing = {"M", "N", "tx_antennas", "rx_antennas"} - set(d)
        if missing:
            raise ValueError(f"network config is missing keys: {sorted(missing)}")
        return cls(int(d["M"]), int(d["N"]), tuple(d["tx_antennas"]), tuple(d["rx_antennas"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "NetworkConfig":
        return cls.from_dict(json.loads(text))


def _phasor_draw(seed: int, key: tuple[int, ...], size: int, h_min: float, h_max: float) -> np.ndarray:
    # one (magnitude, phase) pair per row, so prefixes are stable when size grows
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))
    u = rng.random((size, 2))
    mag = h_min + (h_max - h_min) * u[:, 0]
    return mag * np.exp(2j * np.pi * u[:, 1])


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ExtendedChannels:
    """Diagonal channels over an ``n``-fold symbol extension of a SIMO network.

    ``coeffs[j, i, r, t]`` is the gain from transmitter ``i`` to antenna ``r``
    of receiver ``j`` at channel use ``t``; the matrix ``H^{[ji]}_r`` is
    ``diag(coeffs[j, i, r])`` and is never formed explicitly.
    """

    config: NetworkConfig
    n: int
    coeffs: np.ndarray
    magnitude_bounds: tuple[float, float] = (H_MIN, H_MAX)
    seed: int | None = None
    specialized: bool = field(default=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))
        shape = (self.config.N, self.config.M, self.R, self.n)
        if self.coeffs.shape != shape:
            raise ValueError(f"coefficient array has shape {self.coeffs.shape}, expected {shape}")
        if not self.specialized:
            h_min, h_max = self.magnitude_bounds
            mags = np.abs(self.coeffs)
            if h_min <= 0 or mags.min(initial=h_min) < h_min or mags.max(initial=h_max) > h_max:
                raise ValueError(f"channel magnitudes outside [{h_min}, {h_max}]")

    @property
    def R(self) -> int:
        return self.config.rx_antennas[0]

    def coeff(self, j: int, i: int, r: int, t: int) -> complex:
        return complex(self.coeffs[j, i, r, t])

    def diagonal(self, j: int, i: int, r: int) -> np.ndarray:
        """Diagonal of ``H^{[ji]}_r`` as a length-``n`` vector."""
        return self.coeffs[j, i, r]

    def dense(self, j: int, i: int, r: int) -> np.ndarray:
        return np.diag(self.coeffs[j, i, r])

    def __len__(self) -> int:
        return self.coeffs.size

    def __iter__(self) -> Iterator[tuple[tuple[int, int, int, int], complex]]:
        for idx in np.ndindex(self.coeffs.shape):
            yield idx, complex(self.coeffs[idx])

    def masked(self, keep: np.ndarray) -> "ExtendedChannels":
        """Copy with every coefficient where ``keep`` is False set to zero.

        The result is flagged ``specialized``: it is a deliberately
        non-generic realization and skips the magnitude-bound check.
        """
        keep = np.broadcast_to(np.asarray(keep, dtype=bool), self.coeffs.shape)
        return ExtendedChannels(
            self.config, self.n, np.where(keep, self.coeffs, 0), self.magnitude_bounds,
            self.seed, specialized=True,
        )

    def to_dict(self) -> dict:
        """JSON dump: ``"j/i/r"`` -> list of ``[re, im]`` pairs over channel uses."""
        N, M, R, _ = self.coeffs.shape
        return {
            "config": self.config.to_dict(),
            "n": self.n,
            "seed": self.seed,
            "magnitude_bounds": list(self.magnitude_bounds),
            "coeffs": {
                f"{j}/{i}/{r}": [[z.real, z.imag] for z in self.coeffs[j, i, r].tolist()]
                for j in range(N) for i in range(M) for r in range(R)
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExtendedChannels":
        config = NetworkConfig.from_dict(d["config"])
        n = int(d["n"])
        R = config.rx_antennas[0]
        coeffs = np.empty((config.N, config.M, R, n), dtype=complex)
        for key, pairs in d["coeffs"].items():
            j, i, r = (int(x) for x in key.split("/"))
            coeffs[j, i, r] = [complex(re, im) for re, im in pairs]
        return cls(config, n, coeffs, tuple(d.get("magnitude_bounds", (H_MIN, H_MAX))), d.get("seed"))


def _require_simo(config: NetworkConfig) -> int:
    for i, a in enumerate(config.tx_antennas):
        if a != 1:
            raise ValueError(
                f"transmitter {i} has {a} antennas; symbol-extended channels need a SIMO "
                "network (decompose_transmitters first)"
            )
    if len(set(config.rx_antennas)) != 1:
        raise ValueError(f"receivers must share one antenna count, got {list(config.rx_antennas)}")
    return config.rx_antennas[0]


def draw_extended_channels(config: NetworkConfig, n: int, seed: int,
                           h_min: float = H_MIN, h_max: float = H_MAX) -> ExtendedChannels:
    """Draw ``r * exp(i theta)`` coefficients, ``r ~ U[h_min, h_max]``, ``theta ~ U[0, 2pi)``.

    Each ``(j, i, r)`` triple has its own seeded stream, so enlarging the
    network or the extension length leaves existing draws untouched.
    """
    R = _require_simo(config)
    if n < 1:
        raise ValueError(f"extension length must be >= 1, got {n}")
    if not 0 < h_min <= h_max:
        raise ValueError(f"need 0 < h_min <= h_max, got ({h_min}, {h_max})")
    coeffs = np.empty((config.N, config.M, R, n), dtype=complex)
    for j in range(config.N):
        for i in range(config.M):
            for r in range(R):
                coeffs[j, i, r] = _phasor_draw(seed, (_EXTENDED_STREAM, j, i, r), n, h_min, h_max)
    return ExtendedChannels(config, n, coeffs, (h_min, h_max), seed)


@dataclass(frozen=True, eq=False)
class SpatialChannels:
    """Dense ``B_j x A_i`` channel per (receiver, transmitter) pair, no extension."""

    config: NetworkConfig
    H: dict[tuple[int, int], np.ndarray]
    seed: int | None = None

    def __post_init__(self):
        frozen = {}
        for j in range(self.config.N):
            for i in range(self.config.M):
                h = _frozen(self.H[j, i])
                want = (self.config.rx_antennas[j], self.config.tx_antennas[i])
                if h.shape != want:
                    raise ValueError(f"channel ({j}, {i}) has shape {h.shape}, expected {want}")
                frozen[j, i] = h
        object.__setattr__(self, "H", frozen)

    def __getitem__(self, key: tuple[int, int]) -> np.ndarray:
        return self.H[key]

    def reciprocal(self) -> "SpatialChannels":
        """Channels of the role-swapped network: ``H~^{[ij]} = H^{[ji]}^H``."""
        return SpatialChannels(
            reciprocal(self.config),
            {(i, j): h.conj().T for (j, i), h in self.H.items()},
            self.seed,
        )


def draw_spatial_channels(config: NetworkConfig, seed: int,
                          h_min: float = H_MIN, h_max: float = H_MAX) -> SpatialChannels:
    H = {}
    for j in range(config.N):
        for i in range(config.M):
            B, A = config.rx_antennas[j], config.tx_antennas[i]
            H[j, i] = _phasor_draw(seed, (_SPATIAL_STREAM, j, i), B * A, h_min, h_max).reshape(B, A)
    return SpatialChannels(config, H, seed)


def decompose_transmitters(config: NetworkConfig, A: int) -> NetworkConfig:
    """Transmitter-side decomposition: each transmitter becomes ``A`` distributed ones.

    A transmitter with ``a`` antennas (``A`` must divide ``a``) is replaced
    by ``A`` transmitters with ``a // A`` antennas each; receivers are
    untouched. With ``A`` equal to the common transmit antenna count the
    result is a SIMO network with ``A * M`` single-antenna transmitters.
    """
    if A < 1:
        raise ValueError(f"A must be positive, got {A}")
    tx = []
    for i, a in enumerate(config.tx_antennas):
        if a % A:
            raise ValueError(f"A={A} does not divide the {a} antennas of transmitter {i}")
        tx.extend([a // A] * A)
    return NetworkConfig(len(tx), config.N, tuple(tx), config.rx_antennas)


def reciprocal(config: NetworkConfig) -> NetworkConfig:
    return NetworkConfig(config.N, config.M, config.rx_antennas, config.tx_antennas)
