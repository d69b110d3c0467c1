import math

import pytest

from monolearn.harness import ExperimentConfig, run_self_play

# The three bounded instances used by the rate-certificate acceptance runs.
RATE_INSTANCES = {
    "bilinear_1d": ("bilinear", {"dims": (1, 1)}),
    "bilinear_2d": ("bilinear", {"dims": (2, 2)}),
    "banded_quadratic_n20": ("appendix_e", {"n": 20}),
}


@pytest.fixture(scope="session")
def rate_runs():
    """Fixed-step anchored self-play at eta = 1/(sqrt(6) L), T = 10^4."""
    runs = {}
    for name, (gid, params) in RATE_INSTANCES.items():
        cfg = ExperimentConfig(
            game=gid,
            game_params=params,
            algo="aog",
            T=10_000,
            stride=1,
            record_potential=True,
            keep_trajectory=True,
        )
        runs[name] = run_self_play(cfg)
    return runs


@pytest.fixture(scope="session")
def small_aog_run():
    """Short fixed-step anchored bilinear run with full trajectory."""
    cfg = ExperimentConfig(
        game="bilinear",
        game_params={"dims": (2, 2)},
        algo="aog",
        T=200,
        stride=1,
        record_potential=True,
        keep_trajectory=True,
    )
    return run_self_play(cfg)


def run_eta(result):
    """Common fixed step size of a self-play run."""
    etas = set(result.eta)
    assert len(etas) == 1
    return etas.pop()


def theory_constants(result):
    game = result.game
    L = game.lipschitz_bound
    D = game.diameter()
    assert math.isfinite(D)
    return L, D
