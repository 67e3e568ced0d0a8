import numpy as np
import pytest

from actvp.prompting import (
    PICK_COLOR,
    PLACE_COLOR,
    PromptBox,
    box_from_object,
    box_world_center,
    overlay,
    perimeter_mask,
)
from actvp.sim import make_scene, render


def test_overlay_perimeter_exact():
    img = np.zeros((16, 16, 3), dtype=np.uint8)
    box = PromptBox("pick", (2, 2, 10, 10))
    out = overlay(img, [box])
    mask = perimeter_mask(box.rect, 16, 16)
    assert (out[mask] == PICK_COLOR).all()
    assert (out[~mask] == 0).all()
    # band is the rect minus its 2-px-shrunk interior
    assert mask.sum() == 8 * 8 - 4 * 4


def test_overlay_no_boxes_identity():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(96, 96, 3), dtype=np.uint8)
    out = overlay(img, [])
    assert out.tobytes() == img.tobytes()


def test_overlay_place_wins_on_shared_edge():
    img = np.zeros((20, 20, 3), dtype=np.uint8)
    pick = PromptBox("pick", (2, 2, 10, 10))
    place = PromptBox("place", (8, 2, 16, 10))
    out = overlay(img, [pick, place])
    shared = perimeter_mask(pick.rect, 20, 20) & perimeter_mask(place.rect, 20, 20)
    assert shared.sum() > 0
    assert (out[shared] == PLACE_COLOR).all()


def test_overlay_idempotent():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, size=(96, 96, 3), dtype=np.uint8)
    boxes = [PromptBox("pick", (5, 5, 30, 25)), PromptBox("place", (50, 40, 90, 80))]
    once = overlay(img, boxes)
    twice = overlay(once, boxes)
    assert once.tobytes() == twice.tobytes()


def test_overlay_changed_pixel_count_closed_form():
    rng = np.random.default_rng(2)
    img = rng.integers(1, 250, size=(96, 96, 3), dtype=np.uint8)  # never pure green/red
    pick = PromptBox("pick", (4, 4, 40, 30))
    place = PromptBox("place", (20, 10, 60, 50))
    out = overlay(img, [pick, place])
    changed = (out != img).any(axis=2).sum()
    band = perimeter_mask(pick.rect) | perimeter_mask(place.rect)
    assert changed == band.sum()


def test_overlay_rejects_out_of_bounds():
    img = np.zeros((16, 16, 3), dtype=np.uint8)
    with pytest.raises(ValueError):
        overlay(img, [PromptBox("pick", (2, 2, 17, 10))])
    with pytest.raises(ValueError):
        overlay(img, [PromptBox("pick", (5, 5, 5, 10))])


def test_overlay_rejects_duplicate_roles():
    img = np.zeros((16, 16, 3), dtype=np.uint8)
    with pytest.raises(ValueError):
        overlay(img, [PromptBox("pick", (1, 1, 5, 5)), PromptBox("pick", (6, 6, 10, 10))])


def test_box_from_object_dilation_and_clamp():
    scene = make_scene(1, seed=0)
    box = box_from_object(scene, scene.objects[0].id)
    x0, y0, x1, y1 = box.rect
    assert 0 <= x0 < x1 <= 96 and 0 <= y0 < y1 <= 96
    with pytest.raises(KeyError):
        box_from_object(scene, 999)


def test_box_contains_rendered_object_pixels():
    # 100 random objects: rendered fill pixels are inside the returned rect
    checked = 0
    for seed in range(12):
        scene = make_scene(3, seed=seed)
        scene.gripper.position = (0.0, 0.6, 0.25)
        img = render(scene, "front")
        for obj in scene.objects:
            solo = scene.copy()
            solo.objects = [obj]
            solo_img = render(solo, "front")
            fill = (solo_img == np.array(obj.color, dtype=np.uint8)).all(axis=2)
            if not fill.any():
                continue
            x0, y0, x1, y1 = box_from_object(scene, obj.id).rect
            rows, cols = np.nonzero(fill)
            assert rows.min() >= y0 and rows.max() < y1, (seed, obj.id)
            assert cols.min() >= x0 and cols.max() < x1, (seed, obj.id)
            checked += 1
    assert checked >= 100


def test_box_world_center_near_object_center():
    scene = make_scene(1, seed=0)
    for obj in scene.objects:
        box = box_from_object(scene, obj.id)
        cx, cy = box_world_center(box)
        assert abs(cx - obj.position[0]) < 0.006
        assert abs(cy - obj.position[1]) < 0.004


def test_prompt_box_json_round_trip():
    box = PromptBox("place", (1, 2, 3, 4))
    assert PromptBox.from_json(box.to_json()) == box
