import numpy as np
import pytest

from actvp.demos import DemoConfig, Task, _run_script, demonstrate, generate_demos, task_for
from actvp.sim import judge, make_scene
from actvp.sim.world import APERTURE_MAX, WORKSPACE_X, WORKSPACE_Y, WORKSPACE_Z


def test_zero_noise_demo_succeeds_cleanly():
    cfg = DemoConfig(waypoint_noise_sigma=0.0, speed_jitter=0.0, pause_prob=0.0)
    scene = make_scene(1, seed=0)
    task = task_for(scene, 4)
    ep = demonstrate(scene, task, cfg, np.random.default_rng(0))
    assert ep.meta["attempts"] == 1
    # replay the recorded actions and confirm no misalignment events
    replay = scene.copy()
    from actvp.sim import step
    rng = np.random.default_rng(0)
    for a in ep.actions:
        step(replay, tuple(float(v) for v in a), rng)
    misses = [e for e in replay.events
              if e.kind == "grasp-attempt" and e.payload["offset"] > e.payload["tolerance"]]
    assert misses == []
    assert judge(replay, task.pick_id, task.region).success


def test_same_seed_bit_identical_episodes():
    cfg = DemoConfig()
    scene = make_scene(2, seed=3)
    pick = next(o.id for o in scene.objects if o.category == "rigid-box-large")
    task = task_for(scene, pick)
    a = demonstrate(scene.copy(), task, cfg, np.random.default_rng(9))
    b = demonstrate(scene.copy(), task, cfg, np.random.default_rng(9))
    assert a.actions.tobytes() == b.actions.tobytes()
    assert a.front.tobytes() == b.front.tobytes()
    assert a.meta == b.meta


def test_different_seeds_differ():
    cfg = DemoConfig()
    scene = make_scene(1, seed=5)
    task = task_for(scene, 0)
    a = demonstrate(scene.copy(), task, cfg, np.random.default_rng(1))
    b = demonstrate(scene.copy(), task, cfg, np.random.default_rng(2))
    assert a.actions.shape != b.actions.shape or a.actions.tobytes() != b.actions.tobytes()


def test_demo_quality_baseline_scenario1():
    # frozen oracle run: 100 default-noise scenario-1 demos, >= 95 succeed
    # on the first attempt (regeneration covers the rest)
    cfg = DemoConfig()
    first_try = 0
    for i in range(100):
        scene = make_scene(1, seed=2000 + i)
        task = task_for(scene, i % 9)
        ep = demonstrate(scene, task, cfg, np.random.default_rng([41, i]))
        if ep.meta["attempts"] == 1:
            first_try += 1
        assert ep.T <= cfg.horizon
    assert first_try >= 95, first_try


def test_actions_stay_in_workspace():
    cfg = DemoConfig()
    scene = make_scene(1, seed=8)
    task = task_for(scene, 2)
    ep = demonstrate(scene, task, cfg, np.random.default_rng(4))
    a = ep.actions
    assert np.all(a[:, 0] >= -0.03) and np.all(a[:, 0] <= WORKSPACE_X + 0.03)
    assert np.all(a[:, 1] >= -0.03) and np.all(a[:, 1] <= WORKSPACE_Y + 0.03)
    assert np.all(a[:, 2] >= -0.03) and np.all(a[:, 2] <= WORKSPACE_Z + 0.03)
    assert np.all(a[:, 3] >= 0) and np.all(a[:, 3] <= APERTURE_MAX)


def test_bowl_target_rejected():
    scene = make_scene(2, seed=1)
    bowl = next(o.id for o in scene.objects if o.category == "flexible-bowl")
    task = task_for(scene, bowl)
    with pytest.raises(ValueError):
        demonstrate(scene, task, DemoConfig(), np.random.default_rng(0))


def test_infeasible_config_errors_after_20_attempts():
    # absurd noise never grasps; must raise rather than loop forever
    cfg = DemoConfig(waypoint_noise_sigma=0.2)
    scene = make_scene(1, seed=2)
    task = task_for(scene, 0)
    with pytest.raises(RuntimeError, match="20"):
        demonstrate(scene, task, cfg, np.random.default_rng(0))


def test_generate_demos_scenario2_products_and_boxes():
    eps = generate_demos(2, per_product=1, seed=11, config=DemoConfig())
    cats = [ep.meta["target_category"] for ep in eps]
    assert cats == ["rigid-box-large", "rigid-box-small", "reflective-bottle", "slippery-jar"]
    for ep in eps:
        assert [b["role"] for b in ep.meta["boxes"]] == ["pick"]
        assert judge_success_from_meta(ep)


def test_generate_demos_scenario3_has_place_box():
    eps = generate_demos(3, per_product=1, seed=13, config=DemoConfig())
    for ep in eps:
        roles = [b["role"] for b in ep.meta["boxes"]]
        assert roles == ["pick", "place"]


def judge_success_from_meta(ep):
    # replay the episode actions against a fresh scene; must end in success
    from actvp.sim import step
    scene = make_scene(ep.meta["scenario"], ep.meta["seed"])
    rng = np.random.default_rng(0)  # slip draws: none expected with firm grip
    for a in ep.actions:
        step(scene, tuple(float(v) for v in a), rng)
    return judge(scene, ep.meta["target_id"], tuple(ep.meta["region"])).success
