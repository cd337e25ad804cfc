"""Shared fixtures and hypothesis settings for the test suite."""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mcbd.model import ConstraintScheme, PrecodingMode, SystemConfig, build_instance

settings.register_profile(
    "mcbd",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("mcbd")


def make_instance(
    num_bs=2,
    antennas_per_bs=2,
    num_users=2,
    antennas_per_user=1,
    power=10.0,
    weights=(),
    scheme=ConstraintScheme.PER_BS,
    mode=PrecodingMode.BD,
    seed=0,
):
    cfg = SystemConfig(
        num_bs=num_bs,
        antennas_per_bs=antennas_per_bs,
        num_users=num_users,
        antennas_per_user=antennas_per_user,
        power=power,
        weights=weights,
        scheme=scheme,
        mode=mode,
    )
    return build_instance(cfg, seed=seed)


def single_channel_instance(H, weights, scheme=ConstraintScheme.PER_BS, power=10.0):
    """One-user instance with a hand-picked 1xM channel row."""
    from mcbd.model import ChannelSet, ComplementBasis, ProblemInstance, build_constraint_masks

    M = H.shape[1]
    cfg = SystemConfig(num_bs=M, antennas_per_bs=1, num_users=1,
                       antennas_per_user=1, power=power, weights=weights,
                       scheme=scheme)
    chans = ChannelSet((H.astype(complex),), seed=0)
    return ProblemInstance(cfg, chans, build_constraint_masks(cfg),
                           ComplementBasis((np.eye(M, dtype=complex),)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_psd(rng, n, rank=None):
    """A random complex PSD matrix, optionally rank-deficient."""
    rank = n if rank is None else rank
    G = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return G @ G.conj().T / rank
