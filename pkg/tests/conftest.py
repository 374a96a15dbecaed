"""Shared fixtures: canonical synthetic scenes and one pipeline run reused
across modules to keep the suite fast."""

import time
from types import SimpleNamespace

import numpy as np
import pytest

from planaris.io import save_point_cloud
from planaris.pipeline import run_pipeline
from planaris.synth import generate_scene, single_room_spec


@pytest.fixture(scope="session")
def single_room_scene():
    """4x3x2.8 m room, 1000 pts/m^2, sigma 0.005, seed 0."""
    return generate_scene(single_room_spec())


@pytest.fixture(scope="session")
def single_room_run(single_room_scene, tmp_path_factory):
    """Full pipeline result on the canonical room, default settings.

    Exposes the result plus the input path, output directory and wall-clock
    runtime so callers can rerun or time-check the same scene.
    """
    td = tmp_path_factory.mktemp("single_room")
    cloud_path = td / "room.ply"
    save_point_cloud(single_room_scene.cloud, cloud_path, binary=True)
    t0 = time.perf_counter()
    result = run_pipeline(cloud_path, td / "out")
    elapsed = time.perf_counter() - t0
    return SimpleNamespace(result=result, cloud_path=cloud_path,
                           out_dir=td / "out", elapsed_s=elapsed)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
