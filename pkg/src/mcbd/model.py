"""System model: configuration, seeded channels, constraint masks, bases.

The cooperating base stations are stacked into one auxiliary broadcast
channel with M = A * M_B transmit antennas serving K users of N antennas
each. Everything here is immutable after construction.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleConfigError
from .numerics import check_finite

__all__ = [
    "ConstraintScheme",
    "PrecodingMode",
    "SystemConfig",
    "ChannelSet",
    "ConstraintMasks",
    "ComplementBasis",
    "ProblemInstance",
    "generate_channels",
    "build_constraint_masks",
    "complement_basis",
    "build_instance",
    "instance_to_json",
    "instance_from_json",
]


class ConstraintScheme(enum.Enum):
    """Which antenna groups share a power budget."""

    PER_BS = "per-bs"
    PER_ANTENNA = "per-antenna"
    SUM = "sum"


class PrecodingMode(enum.Enum):
    """Interference constraints: toward everyone, or only later-encoded users."""

    BD = "bd"
    ZF_DPC = "zf-dpc"


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions, budgets and weights of one downlink instance.

    power is the per-group budget (identical for all groups); budgets may
    override it with one entry per constraint group.
    """

    num_bs: int
    antennas_per_bs: int
    num_users: int
    antennas_per_user: int
    power: float
    weights: tuple[float, ...] = ()
    scheme: ConstraintScheme = ConstraintScheme.PER_BS
    mode: PrecodingMode = PrecodingMode.BD
    budgets: tuple[float, ...] = ()

    def __post_init__(self):
        if min(self.num_bs, self.antennas_per_bs, self.num_users, self.antennas_per_user) < 1:
            raise ValueError("all dimensions must be >= 1")
        if not self.power > 0:
            raise ValueError("power budget must be positive")
        if not self.weights:
            object.__setattr__(self, "weights", (1.0,) * self.num_users)
        if len(self.weights) != self.num_users:
            raise ValueError("need one weight per user")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        if self.antennas_per_user * self.num_users > self.total_antennas:
            raise InfeasibleConfigError(
                f"N*K = {self.antennas_per_user * self.num_users} receive antennas "
                f"exceed M = {self.total_antennas} transmit antennas"
            )
        if not self.budgets:
            object.__setattr__(self, "budgets", (float(self.power),) * self.group_count)
        if len(self.budgets) != self.group_count:
            raise ValueError("need one budget per constraint group")
        if any(p <= 0 for p in self.budgets):
            raise ValueError("budgets must be positive")

    @property
    def total_antennas(self) -> int:
        return self.num_bs * self.antennas_per_bs

    @property
    def group_count(self) -> int:
        if self.scheme is ConstraintScheme.PER_BS:
            return self.num_bs
        if self.scheme is ConstraintScheme.PER_ANTENNA:
            return self.total_antennas
        return 1


@dataclass(frozen=True)
class ChannelSet:
    """The K user channels H_k (N x M complex), plus the seed that made them."""

    channels: tuple[np.ndarray, ...]
    seed: int

    def __post_init__(self):
        for H in self.channels:
            check_finite(H, "channel matrix")


@dataclass(frozen=True)
class ConstraintMasks:
    """0/1 diagonals of the per-group masks, stacked as a (G, M) array."""

    diagonals: np.ndarray

    @property
    def group_count(self) -> int:
        return int(self.diagonals.shape[0])

    def matrices(self) -> list[np.ndarray]:
        return [np.diag(row) for row in self.diagonals]


@dataclass(frozen=True)
class ComplementBasis:
    """Per-user orthonormal bases of the directions that force no interference."""

    bases: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class ProblemInstance:
    config: SystemConfig
    channels: ChannelSet
    masks: ConstraintMasks
    bases: ComplementBasis

    def __post_init__(self):
        M = self.config.total_antennas
        if any(H.shape != (self.config.antennas_per_user, M) for H in self.channels.channels):
            raise ValueError("channel dimensions inconsistent with config")
        if self.masks.diagonals.shape != (self.config.group_count, M):
            raise ValueError("mask dimensions inconsistent with config")


def generate_channels(config: SystemConfig, seed: int) -> ChannelSet:
    """Draw the K channels i.i.d. CSCG with unit entry variance.

    Uses the counter-based Philox generator keyed by the seed, so a given
    (config, seed) pair reproduces bitwise on any platform. The measure-zero
    event of a row-rank-deficient draw is rejected and redrawn.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    N, M = config.antennas_per_user, config.total_antennas
    channels = []
    for _ in range(config.num_users):
        while True:
            H = (rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M))) / np.sqrt(2)
            s = np.linalg.svd(H, compute_uv=False)
            if s[-1] > 1e-10 * max(N, M) * s[0]:
                break
        channels.append(H)
    return ChannelSet(tuple(channels), seed)


def build_constraint_masks(config: SystemConfig) -> ConstraintMasks:
    """Group layout: BS a owns antennas a*M_B .. (a+1)*M_B - 1."""
    M = config.total_antennas
    if config.scheme is ConstraintScheme.PER_BS:
        diag = np.zeros((config.num_bs, M))
        for a in range(config.num_bs):
            diag[a, a * config.antennas_per_bs:(a + 1) * config.antennas_per_bs] = 1.0
    elif config.scheme is ConstraintScheme.PER_ANTENNA:
        diag = np.eye(M)
    else:
        diag = np.ones((1, M))
    return ConstraintMasks(diag)


def _interferers(mode: PrecodingMode, k: int, K: int) -> list[int]:
    if mode is PrecodingMode.BD:
        return [j for j in range(K) if j != k]
    return [j for j in range(K) if j > k]


def complement_basis(channels: ChannelSet, k: int, mode: PrecodingMode) -> np.ndarray:
    """Orthonormal basis of the null space of the stacked forbidden channels.

    BD stacks every other user's channel; the ordered variant stacks only
    later users, so the last user sees an empty stack and gets I_M back.
    """
    K = len(channels.channels)
    M = channels.channels[0].shape[1]
    rows = _interferers(mode, k, K)
    if not rows:
        return np.eye(M, dtype=complex)
    G = np.vstack([channels.channels[j] for j in rows])
    U, s, Vh = np.linalg.svd(G, full_matrices=True)
    rank_tol = 1e-10 * max(G.shape) * float(s[0])
    r = int(np.sum(s > rank_tol))
    if r >= M:
        raise InfeasibleConfigError(
            f"stacked interference channels span all {M} transmit dimensions"
        )
    return Vh.conj().T[:, r:]


def build_instance(config: SystemConfig, seed: int) -> ProblemInstance:
    channels = generate_channels(config, seed)
    masks = build_constraint_masks(config)
    bases = ComplementBasis(
        tuple(complement_basis(channels, k, config.mode) for k in range(config.num_users))
    )
    return ProblemInstance(config, channels, masks, bases)


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(data: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data])


def instance_to_json(instance: ProblemInstance) -> str:
    cfg = instance.config
    doc = {
        "config": {
            "num_bs": cfg.num_bs,
            "antennas_per_bs": cfg.antennas_per_bs,
            "num_users": cfg.num_users,
            "antennas_per_user": cfg.antennas_per_user,
            "power": cfg.power,
            "weights": list(cfg.weights),
            "scheme": cfg.scheme.value,
            "mode": cfg.mode.value,
            "budgets": list(cfg.budgets),
        },
        "seed": instance.channels.seed,
        "channels": [_matrix_to_json(H) for H in instance.channels.channels],
    }
    return json.dumps(doc, indent=1)


def instance_from_json(text: str) -> ProblemInstance:
    doc = json.loads(text)
    c = doc["config"]
    config = SystemConfig(
        num_bs=c["num_bs"],
        antennas_per_bs=c["antennas_per_bs"],
        num_users=c["num_users"],
        antennas_per_user=c["antennas_per_user"],
        power=c["power"],
        weights=tuple(c["weights"]),
        scheme=ConstraintScheme(c["scheme"]),
        mode=PrecodingMode(c["mode"]),
        budgets=tuple(c["budgets"]),
    )
    channels = ChannelSet(tuple(_matrix_from_json(m) for m in doc["channels"]), doc["seed"])
    masks = build_constraint_masks(config)
    bases = ComplementBasis(
        tuple(complement_basis(channels, k, config.mode) for k in range(config.num_users))
    )
    return ProblemInstance(config, channels, masks, bases)
