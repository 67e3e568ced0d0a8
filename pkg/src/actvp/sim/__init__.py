from .world import (
    APERTURE_MAX,
    CATEGORY_SPECS,
    DEFAULT_REGION,
    GRID_X,
    GRID_Y,
    HOME_POSITION,
    PICKABLE_CATEGORIES,
    SAFE_Z,
    WORKSPACE_X,
    WORKSPACE_Y,
    WORKSPACE_Z,
    GripperState,
    ObjectInstance,
    Scene,
    SimEvent,
    make_scene,
    rect_inside,
    rects_overlap,
    scene_from_json,
    scene_to_json,
    step,
)
from .render import RES, render, world_to_front_px
from .judge import FAILURE_TAGS, Outcome, judge, region_clearance
