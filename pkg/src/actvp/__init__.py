"""actvp: annotation-guided visual prompting for imitation-learned pick-and-place."""

__version__ = "0.1.0"
