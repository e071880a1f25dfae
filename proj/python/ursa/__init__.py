"""Road-scene view planning, label compositing and vote aggregation."""

import os
from pathlib import Path

_bundled = Path(__file__).with_name("data")
if _bundled.is_dir():
    os.environ.setdefault("URSA_DATA_DIR", str(_bundled))

from ._ursa import (  # noqa: E402
    RoadGraph,
    UrsaError,
    ViewPlan,
    World,
    accuracy_curve,
    aggregate_labels,
    check_plan,
    class_iou,
    cluster_interchanges,
    composite,
    coverage,
    data_dir,
    decode_ppm,
    diminishing_returns_point,
    encode_ppm,
    generate_world,
    partition,
    plan_viewpoints,
    remap,
    run_cli,
    shortest_path,
    simulate_votes,
    vote_stats,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
