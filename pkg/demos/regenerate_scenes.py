"""Rebuild the shipped scene files in scenes/ from the preset builders."""

from pathlib import Path

from thznirs.presets import PLAN_MINI_306, corridor_scene, hallway_scene
from thznirs.scene import save_scene

scenes_dir = Path(__file__).parent.parent / "scenes"
scenes_dir.mkdir(exist_ok=True)

targets = {
    "corridor.json": corridor_scene(),
    "corridor_no_nirs.json": corridor_scene(nirs=False),
    "corridor_mini.json": corridor_scene(plan=PLAN_MINI_306),
    "corridor_mini_no_nirs.json": corridor_scene(nirs=False, plan=PLAN_MINI_306),
    "hallway.json": hallway_scene(),
    "hallway_no_nirs.json": hallway_scene(nirs=False),
    "hallway_mini.json": hallway_scene(plan=PLAN_MINI_306),
    "hallway_mini_no_nirs.json": hallway_scene(nirs=False, plan=PLAN_MINI_306),
}
for name, scene in targets.items():
    save_scene(scene, scenes_dir / name)
    print(f"wrote {scenes_dir / name}")
