import math

import pytest

from ecrasim import ConfigError, DecodePhase, Replica, Scheme, SimConfig, StopRule, UserOutcome, linear_snr


def test_linear_snr_values():
    assert linear_snr(0) == 1.0
    assert linear_snr(6) == pytest.approx(3.98107, abs=1e-5)


@pytest.mark.parametrize("bad", [float("-inf"), float("inf"), float("nan")])
def test_linear_snr_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        linear_snr(bad)


def test_defaults_validate():
    cfg = SimConfig()
    assert cfg.vf_len == 200 and cfg.window_len == 600 and cfg.window_shift == 20 and cfg.degree == 2
    assert cfg.snr == pytest.approx(linear_snr(6.0))


def test_aloha_forces_single_replica():
    assert SimConfig(scheme="ALOHA", degree=3).degree == 1


@pytest.mark.parametrize("changes, rule", [
    ({"g_load": -0.1}, "g_load"),
    ({"degree": 0}, "degree"),
    ({"rate": 0.0}, "rate"),
    ({"vf_len": 1, "degree": 2}, "vf_len"),
    ({"window_len": 0.0}, "window_len"),
    ({"window_shift": 0.0}, "window_shift"),
    ({"window_len": 100.0}, "window_vf"),
    ({"max_sic_iters": 0}, "max_sic_iters"),
    ({"seed": -1}, "seed"),
    ({"sim_duration": -5.0}, "sim_duration"),
    ({"grid_symbols": 0}, "grid_symbols"),
    ({"rate": 2.4}, "rate_capacity"),
    ({"g_load": float("nan")}, "finite"),
])
def test_each_violation_has_its_own_rule(changes, rule):
    with pytest.raises(ConfigError) as exc:
        SimConfig(**changes)
    assert exc.value.rule == rule


def test_rate_at_capacity_is_allowed():
    cfg = SimConfig(rate=math.log2(1 + linear_snr(6.0)))
    assert cfg.rate > 2.3163


def test_crdsa_skips_window_rule():
    SimConfig(scheme=Scheme.CRDSA, window_len=10.0, rate=2.31)


def test_config_hash_stable_and_sensitive():
    a = SimConfig(seed=3)
    assert a.config_hash() == SimConfig(seed=3).config_hash()
    assert a.config_hash() != a.replace(g_load=1.1).config_hash()


def test_stop_rule_from_dict():
    cfg = SimConfig(stop_rule={"min_packet_errors": None, "max_packets": 10})
    assert cfg.stop_rule == StopRule(None, 10)


def test_duration_grows_with_budget():
    small = SimConfig(stop_rule=StopRule(None, 1000)).duration()
    large = SimConfig(stop_rule=StopRule(None, 10000)).duration()
    assert large > small > 2 * 600 + 200
    assert SimConfig(sim_duration=5000.0).duration() == 5000.0


def test_replica_end():
    assert Replica(0, 2.5, 0).end == 3.5


def test_outcome_phase_matches_decoded():
    UserOutcome(1, True, DecodePhase.SIC, 0)
    UserOutcome(1, False, DecodePhase.NONE, 0)
    with pytest.raises(ValueError):
        UserOutcome(1, False, DecodePhase.SIC, 0)
    with pytest.raises(ValueError):
        UserOutcome(1, True, DecodePhase.NONE, 0)
