"""
LOFT v1.0 - Channel Model
Deterministic worst-case path loss, jamming interference, achievable rate
and the transmit power needed to sustain a target rate.

Links:
  A2A (both endpoints airborne)  → LoS exponent alpha_los, factor mu_los
  G2A (any terrestrial endpoint) → NLoS exponent alpha_nlos, factor mu_nlos
  Jammer → receiver              → always G2A

Rate on a link with transmit power P:
    B_p · log2(1 + P · Γ · d^-α / (Σ_j P_j Γ_G2A d_j^-α_nlos + σ²))
"""

import math
from dataclasses import dataclass
from enum import Enum

from errors import ChannelError
from model import ChannelParams, EnergyParams, NodeRole, Position3D, Scenario, SPEED_OF_LIGHT
from utils.logger import get_logger

log = get_logger(__name__)

_LN2 = math.log(2.0)


class LinkType(Enum):
    """Propagation class of a link."""
    A2A = "a2a"
    G2A = "g2a"   # ground-to-air and air-to-ground alike


def link_type_for(tx_role: NodeRole, rx_role: NodeRole) -> LinkType:
    """A2A iff both endpoints are airborne roles."""
    return LinkType.A2A if (tx_role.airborne and rx_role.airborne) else LinkType.G2A


# ====================================================================== #
# Radio environment
# ====================================================================== #

@dataclass(frozen=True)
class RadioEnvironment:
    """
    Everything a link computation needs besides its two endpoints.

    bandwidth is the per-node FDMA share B_p; rate is the rate every link
    of this environment must sustain.
    """
    channel: ChannelParams
    energy: EnergyParams
    jammers: tuple[Position3D, ...]
    bandwidth: float
    rate: float

    @classmethod
    def for_gathering(cls, scenario: Scenario) -> "RadioEnvironment":
        """CH → UAV → leader links: B_p = B/N, rate R."""
        n_uavs = max(len(scenario.uavs), 1)
        return cls(
            channel=scenario.channel,
            energy=scenario.energy,
            jammers=scenario.jammer_positions,
            bandwidth=scenario.channel.total_bandwidth / n_uavs,
            rate=scenario.channel.rate_req,
        )

    @classmethod
    def for_backhaul(cls, scenario: Scenario, bandwidth: float | None = None) -> "RadioEnvironment":
        """Leader → relays → BS links: the leader forwards N·R; same B_p unless overridden."""
        n_uavs = max(len(scenario.uavs), 1)
        return cls(
            channel=scenario.channel,
            energy=scenario.energy,
            jammers=scenario.jammer_positions,
            bandwidth=bandwidth if bandwidth is not None else scenario.channel.total_bandwidth / n_uavs,
            rate=n_uavs * scenario.channel.rate_req,
        )

    @property
    def noise_power(self) -> float:
        """σ² = noise PSD × B_p."""
        return self.channel.noise_psd * self.bandwidth

    @property
    def spectral_factor(self) -> float:
        """2^(rate/B_p) − 1, or inf when it overflows a double."""
        try:
            return math.expm1(self.rate / self.bandwidth * _LN2)
        except OverflowError:
            return math.inf

    def exponent(self, link_type: LinkType) -> float:
        return self.channel.alpha_los if link_type is LinkType.A2A else self.channel.alpha_nlos


# ====================================================================== #
# Equations
# ====================================================================== #

def free_space_constant(channel: ChannelParams) -> float:
    """K_o = 4π f_c / c (1/m)."""
    return 4.0 * math.pi * channel.carrier_freq / SPEED_OF_LIGHT


def inverse_pathloss(link_type: LinkType, channel: ChannelParams) -> float:
    """
    Inverse path-loss coefficient Γ of a link class.

    Args:
        link_type: A2A or G2A.
        channel: Channel parameters.

    Returns:
        1/(K_o^α₁ μ_LoS) for A2A, 1/(K_o^α₂ μ_NLoS) for G2A.
    """
    k_o = free_space_constant(channel)
    if link_type is LinkType.A2A:
        return 1.0 / (k_o ** channel.alpha_los * channel.mu_los)
    return 1.0 / (k_o ** channel.alpha_nlos * channel.mu_nlos)


def jamming_power(receiver: Position3D, env: RadioEnvironment) -> float:
    """Σ_j P_j Γ_G2A d_jq^(−α_nlos); zero without jammers."""
    if not env.jammers or env.energy.jammer_power == 0.0:
        return 0.0
    gamma = inverse_pathloss(LinkType.G2A, env.channel)
    alpha = env.channel.alpha_nlos
    total = 0.0
    for jammer in env.jammers:
        d = receiver.distance_to(jammer)
        if d == 0.0:
            raise ChannelError(f"jammer at {jammer} coincides with receiver")
        total += env.energy.jammer_power * gamma * d ** (-alpha)
    return total


def interference_plus_noise(receiver: Position3D, env: RadioEnvironment) -> float:
    """
    Interference-plus-noise power at a receiver (watts).

    Raises:
        ChannelError: a jammer sits exactly on the receiver.
    """
    return jamming_power(receiver, env) + env.noise_power


def _link_distance(tx: Position3D, rx: Position3D) -> float:
    d = tx.distance_to(rx)
    if d == 0.0:
        raise ChannelError(f"transmitter and receiver coincide at {tx}")
    return d


def required_power(tx: Position3D, rx: Position3D, link_type: LinkType, env: RadioEnvironment) -> float:
    """
    Transmit power that delivers exactly ``env.rate`` from tx to rx.

    Returns:
        (2^(R/B_p) − 1) · (I + σ²) · Γ⁻¹ · d^α in watts; ``math.inf`` when
        the spectral factor overflows (infeasible link).
    """
    d = _link_distance(tx, rx)
    factor = env.spectral_factor
    if factor == 0.0:
        return 0.0
    if math.isinf(factor):
        return math.inf
    gamma = inverse_pathloss(link_type, env.channel)
    return factor * interference_plus_noise(rx, env) / gamma * d ** env.exponent(link_type)


def achieved_rate(tx_power: float, tx: Position3D, rx: Position3D,
                  link_type: LinkType, env: RadioEnvironment) -> float:
    """
    Shannon rate (bit/s) of a link at a given transmit power.

    Args:
        tx_power: Transmit power in watts (>= 0).
    """
    if tx_power < 0:
        raise ValueError(f"transmit power must be >= 0, got {tx_power}")
    if tx_power == 0.0:
        return 0.0
    d = _link_distance(tx, rx)
    gamma = inverse_pathloss(link_type, env.channel)
    snr = tx_power * gamma * d ** (-env.exponent(link_type)) / interference_plus_noise(rx, env)
    return env.bandwidth * math.log1p(snr) / _LN2


@dataclass(frozen=True)
class LinkBudget:
    """Per-link figures; required_power is inf for an infeasible link."""
    link_type: LinkType
    gamma: float
    distance: float
    interference_noise: float
    required_power: float

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.required_power)

    def lifetime(self, tx_energy: float, circuit_power: float) -> float:
        """E_p / (P_pq + P_p^c); zero for an infeasible link."""
        if not self.feasible:
            return 0.0
        return tx_energy / (self.required_power + circuit_power)


def link_budget(tx: Position3D, rx: Position3D, link_type: LinkType, env: RadioEnvironment) -> LinkBudget:
    """Evaluate every per-link quantity at once."""
    return LinkBudget(
        link_type=link_type,
        gamma=inverse_pathloss(link_type, env.channel),
        distance=_link_distance(tx, rx),
        interference_noise=interference_plus_noise(rx, env),
        required_power=required_power(tx, rx, link_type, env),
    )

