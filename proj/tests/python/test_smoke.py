import math

import pytest

import cagerl


def test_cage_spot_values():
    assert cagerl.th_braking(1.2) == pytest.approx(0.4, abs=1e-12)
    assert cagerl.ttc_braking(2.0) == pytest.approx(0.25, abs=1e-12)
    assert cagerl.th_braking(3.0) == 0.0
    assert math.isinf(cagerl.time_to_collision(30.0, -1.0))


def test_arbitrate_overrides_weak_braking():
    v = cagerl.arbitrate(15.0, 20.0, 0.0, 0.0)
    assert v["breached"]
    assert v["executed_pedal"] == pytest.approx(-0.75)
    assert v["risk_th"] == "r2"


def test_negative_gap_raises():
    with pytest.raises(ValueError):
        cagerl.time_headway(-1.0, 20.0)


def test_environment_episode():
    cfg = cagerl.EnvConfig()
    cfg.episode_max_steps = 50
    env = cagerl.Environment(cfg)
    obs = env.reset(3)
    assert 1.5 <= obs.th <= 3.0
    steps = 0
    while True:
        r = env.step(0.0, True)
        steps += 1
        if r["done"]:
            break
    assert steps == 50
    with pytest.raises(RuntimeError):
        env.step(0.0, True)


def test_reward_and_adversary_reward():
    assert cagerl.reward_headway(2.0, 2.0) == 1.0
    assert cagerl.reward_total(1.0, True) == pytest.approx(0.9)
    assert cagerl.adversary_reward(2.0) == 0.5
    assert cagerl.adversary_reward(0.0) == 100.0


def test_config_overrides():
    text = cagerl.config_text("", ["ddpg.tau=0.01"])
    assert "tau = 0.01" in text
    with pytest.raises(ValueError):
        cagerl.config_text("", ["ddpg.nope=1"])


def test_train_and_evaluate(tmp_path):
    seen = []
    log = cagerl.train(
        overrides=["ddpg.episodes=2", "env.episode_max_steps=100", "ddpg.warmup_steps=50",
                   "train.variant=shallow"],
        out_dir=str(tmp_path),
        on_episode=seen.append,
    )
    assert [e["episode"] for e in log] == [0, 1]
    assert len(seen) == 2
    actions = cagerl.policy_action(str(tmp_path), [[0.5, 0.0, 0.0, 0.0]] * 3)
    assert all(-1.0 <= a <= 1.0 for a in actions)
    m = cagerl.evaluate(model=str(tmp_path), episodes=1, episode_steps=200)
    assert m["collisions"] in (0, 1)
    base = cagerl.evaluate(baseline="rule_follower", episodes=2, episode_steps=500)
    assert base["collisions"] == 0


def test_cli_in_process():
    code, out, _ = cagerl.run_cli(["cage-check", "--th", "1.2"])
    assert code == 0
    assert out.strip() == "0.4"
    assert cagerl.run_cli(["bogus"])[0] == 2
