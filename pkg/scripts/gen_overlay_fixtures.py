"""Regenerate frontend/fixtures/overlay_fixtures.json from the service-side
overlay rules: 20 scripted drags with the resulting rect and perimeter band.

Run from the repo root: python3 scripts/gen_overlay_fixtures.py
"""
import json
from pathlib import Path

import numpy as np

from actvp.prompting import PromptBox, perimeter_mask


def normalize_drag(x0, y0, x1, y1, res=96):
    ax0, ax1 = sorted((x0, x1))
    ay0, ay1 = sorted((y0, y1))
    ax0 = max(0, min(res, ax0))
    ax1 = max(0, min(res, ax1))
    ay0 = max(0, min(res, ay0))
    ay1 = max(0, min(res, ay1))
    return ax0, ay0, ax1, ay1


def main():
    rng = np.random.default_rng(2024)
    cases = []
    drags = []
    # hand-picked edge cases
    drags += [(10, 10, 4, 4), (-5, 20, 30, -8), (0, 0, 96, 96), (90, 90, 120, 120),
              (5, 5, 9, 40), (5, 5, 40, 9)]
    while len(drags) < 20:
        x0, y0 = rng.integers(-10, 100, size=2)
        x1, y1 = rng.integers(-10, 100, size=2)
        nx0, ny0, nx1, ny1 = normalize_drag(int(x0), int(y0), int(x1), int(y1))
        if nx1 - nx0 >= 1 and ny1 - ny0 >= 1:
            drags.append((int(x0), int(y0), int(x1), int(y1)))
    for drag in drags[:20]:
        rect = normalize_drag(*drag)
        box = PromptBox("pick", rect)
        box.validate()
        mask = perimeter_mask(rect)
        ys, xs = np.nonzero(mask)
        cases.append({
            "drag": list(drag),
            "rect": list(rect),
            "band_pixels": sorted(int(y) * 96 + int(x) for y, x in zip(ys, xs)),
        })
    out = Path(__file__).resolve().parent.parent / "frontend" / "fixtures" / "overlay_fixtures.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"image_res": 96, "line_width": 2, "cases": cases}))
    print(f"wrote {len(cases)} cases to {out}")


if __name__ == "__main__":
    main()
