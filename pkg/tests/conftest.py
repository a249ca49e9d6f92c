import math

import numpy as np
import pytest

from pantoguide.kinematics import PantographConfig, inverse_kinematics, PlanarPoint, OutOfWorkspace


@pytest.fixture(scope="session")
def cfg():
    return PantographConfig()


def reachable_points(cfg, n, seed=0, box=(-25.0, 25.0, -25.0, -0.5)):
    """Uniform random points that inverse kinematics accepts."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        u = rng.uniform(box[0], box[1])
        v = rng.uniform(box[2], box[3])
        try:
            inverse_kinematics(cfg, PlanarPoint(u, v))
        except OutOfWorkspace:
            continue
        pts.append(PlanarPoint(u, v))
    return pts


@pytest.fixture(scope="session")
def default_study():
    from pantoguide.synth import synth_study

    return synth_study(seed=0)


@pytest.fixture(scope="session")
def default_summary(default_study):
    from pantoguide.analysis.summary import summarize_study

    trials = default_study.trials["Part1"] + default_study.trials["Part3"]
    return summarize_study(trials, default_study.choices, default_study.experience)
