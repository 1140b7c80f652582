import math
from dataclasses import replace

import numpy as np
import pytest

from channel import (LinkType, RadioEnvironment, achieved_rate, free_space_constant, interference_plus_noise,
                     inverse_pathloss, jamming_power, link_budget, link_type_for, required_power)
from conftest import make_scenario
from errors import ChannelError
from model import SPEED_OF_LIGHT, ChannelParams, EnergyParams, NodeRole, Position3D


@pytest.fixture
def env(small_scenario):
    return RadioEnvironment.for_gathering(small_scenario)


def test_free_space_constant():
    assert free_space_constant(ChannelParams()) == pytest.approx(4 * math.pi * 2e9 / SPEED_OF_LIGHT)


def test_inverse_pathloss_per_link_class():
    ch = ChannelParams()
    k_o = free_space_constant(ch)
    assert inverse_pathloss(LinkType.A2A, ch) == pytest.approx(1 / (k_o ** 2.05 * 10 ** 0.1))
    assert inverse_pathloss(LinkType.G2A, ch) == pytest.approx(1 / (k_o ** 2.32 * 100.0))


def test_link_type_for_roles():
    assert link_type_for(NodeRole.GATHERING_UAV, NodeRole.LEADER) is LinkType.A2A
    assert link_type_for(NodeRole.CLUSTER_HEAD, NodeRole.GATHERING_UAV) is LinkType.G2A
    assert link_type_for(NodeRole.BACKHAUL_UAV, NodeRole.BASE_STATION) is LinkType.G2A


def test_gathering_environment_splits_bandwidth(env):
    assert env.bandwidth == pytest.approx(10e6 / 2)
    assert env.rate == 4e6
    assert env.spectral_factor == pytest.approx(2 ** (4e6 / 5e6) - 1)
    assert env.noise_power == pytest.approx(ChannelParams().noise_psd * 5e6)


def test_backhaul_environment_carries_all_traffic(small_scenario):
    env = RadioEnvironment.for_backhaul(small_scenario)
    assert env.rate == pytest.approx(2 * 4e6)
    assert RadioEnvironment.for_backhaul(small_scenario, bandwidth=1e6).bandwidth == 1e6


def test_interference_is_noise_only_without_jammers(quiet_scenario):
    env = RadioEnvironment.for_gathering(quiet_scenario)
    rx = Position3D(0.0, 0.0, 40.0)
    assert jamming_power(rx, env) == 0.0
    assert interference_plus_noise(rx, env) == env.noise_power


def test_jammer_on_receiver_is_an_error(env):
    with pytest.raises(ChannelError):
        interference_plus_noise(Position3D(20.0, 30.0, 0.0), env)


def test_jamming_falls_with_the_square_of_distance(env):
    env = replace(env, channel=replace(env.channel, alpha_nlos=2.0))
    rx = Position3D(0.0, 0.0, 0.0)
    near = jamming_power(rx, replace(env, jammers=(Position3D(30.0, 40.0, 0.0),)))
    far = jamming_power(rx, replace(env, jammers=(Position3D(60.0, 80.0, 0.0),)))
    assert near / far == pytest.approx(4.0, rel=1e-12)


def test_four_jammers_sum_independently(env):
    jammers = (Position3D(0.0, 0.0, 0.0), Position3D(100.0, 0.0, 0.0),
               Position3D(0.0, 60.0, 0.0), Position3D(70.0, 80.0, 0.0))
    env = replace(env, jammers=jammers, energy=replace(env.energy, jammer_power=1.0))
    rx = Position3D(33.0, 21.0, 45.0)

    k_o = 4 * math.pi * 2e9 / SPEED_OF_LIGHT
    gamma = 1.0 / (k_o ** 2.32 * 100.0)
    expected = 0.0
    for j in jammers:
        d = math.sqrt((rx.x - j.x) ** 2 + (rx.y - j.y) ** 2 + (rx.z - j.z) ** 2)
        expected += 1.0 * gamma / d ** 2.32

    assert jamming_power(rx, env) == pytest.approx(expected, rel=1e-12)
    assert interference_plus_noise(rx, env) == pytest.approx(expected + env.noise_power, rel=1e-12)


def test_required_power_grows_with_jammer_power(env):
    tx, rx = Position3D(5.0, 5.0, 30.0), Position3D(20.0, 5.0, 70.0)
    powers = [required_power(tx, rx, LinkType.A2A, replace(env, energy=replace(env.energy, jammer_power=p)))
              for p in (0.0, 0.01, 0.1, 1.0, 10.0)]
    assert all(a < b for a, b in zip(powers, powers[1:]))


def test_coincident_link_endpoints_are_an_error(env):
    p = Position3D(1.0, 1.0, 10.0)
    with pytest.raises(ChannelError):
        required_power(p, p, LinkType.A2A, env)


def test_required_power_scales_with_distance(env):
    rx = Position3D(0.0, 0.0, 50.0)
    near = required_power(Position3D(10.0, 0.0, 50.0), rx, LinkType.A2A, env)
    far = required_power(Position3D(20.0, 0.0, 50.0), rx, LinkType.A2A, env)
    assert far / near == pytest.approx(2 ** 2.05)


def test_rate_power_round_trip_on_random_links():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        scenario = make_scenario()
        env = RadioEnvironment.for_gathering(scenario)
        env = replace(env, rate=float(rng.uniform(1e5, 2e7)))
        tx = Position3D(*rng.uniform([-50, -50, 0], [150, 150, 100]))
        rx = Position3D(*rng.uniform([-50, -50, 1], [150, 150, 100]))
        link = LinkType.A2A if rng.random() < 0.5 else LinkType.G2A
        power = required_power(tx, rx, link, env)
        assert achieved_rate(power, tx, rx, link, env) == pytest.approx(env.rate, rel=1e-9)


def test_zero_rate_needs_no_power(env):
    zero = replace(env, rate=0.0)
    assert required_power(Position3D(0, 0, 10), Position3D(5, 0, 10), LinkType.A2A, zero) == 0.0


def test_narrowband_makes_links_infeasible():
    scenario = make_scenario(channel=ChannelParams.reference(narrowband=True))
    env = RadioEnvironment.for_gathering(scenario)
    assert math.isinf(env.spectral_factor)
    budget = link_budget(Position3D(0, 0, 0), Position3D(5, 5, 30), LinkType.G2A, env)
    assert not budget.feasible
    assert budget.lifetime(20_000.0, 0.1) == 0.0


def test_link_budget_lifetime(env):
    budget = link_budget(Position3D(0, 0, 0), Position3D(5, 5, 30), LinkType.G2A, env)
    energy = EnergyParams()
    assert budget.feasible
    assert budget.lifetime(energy.node_energy, energy.circuit_power) == pytest.approx(
        energy.node_energy / (budget.required_power + energy.circuit_power))


def test_achieved_rate_rejects_negative_power(env):
    with pytest.raises(ValueError):
        achieved_rate(-1.0, Position3D(0, 0, 0), Position3D(1, 0, 0), LinkType.A2A, env)
    assert achieved_rate(0.0, Position3D(0, 0, 0), Position3D(1, 0, 0), LinkType.A2A, env) == 0.0
