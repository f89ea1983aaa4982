import pathlib

import numpy as np
import pytest

from gaussplex import (CoverParams, DensityCutoff, GaussianMixture,
                       MaxGaussianCover, PointCloud, ReferenceSet,
                       select_landmarks, superlevel_reference)

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

GEYSER = {"h": 0.05, "d0": 0.03, "s": 0.5}


@pytest.fixture(scope="session")
def geyser_cloud() -> PointCloud:
    return PointCloud.from_csv(FIXTURES / "geyser.csv")


@pytest.fixture(scope="session")
def geyser_mixture(geyser_cloud) -> GaussianMixture:
    return GaussianMixture.kde(geyser_cloud, GEYSER["h"])


@pytest.fixture(scope="session")
def geyser_grid_reference(geyser_mixture) -> ReferenceSet:
    """10000 evenly spaced points of the superlevel region f >= 0.03."""
    grid = np.linspace(1.4, 5.3, 40000).reshape(-1, 1)
    dens = geyser_mixture.evaluate_many(grid)
    sup = grid[dens >= GEYSER["d0"]]
    idx = np.linspace(0, len(sup) - 1, 10000).astype(int)
    return ReferenceSet(PointCloud(sup[idx]), source="grid")


@pytest.fixture(scope="session")
def geyser_cover(geyser_mixture, geyser_grid_reference) -> MaxGaussianCover:
    return select_landmarks(geyser_mixture, geyser_grid_reference,
                            CoverParams(GEYSER["s"]))


@pytest.fixture(scope="session")
def geyser_data_cover(geyser_mixture, geyser_cloud) -> MaxGaussianCover:
    """Cover built on the data-superlevel reference, as the CLI pipeline does."""
    ref = superlevel_reference(geyser_mixture, geyser_cloud,
                               DensityCutoff(GEYSER["d0"]))
    return select_landmarks(geyser_mixture, ref, CoverParams(GEYSER["s"]))


def random_mixture(rng, dim, n_centers=None, spread=2.0):
    n = n_centers or int(rng.integers(2, 8))
    centers = rng.normal(0.0, spread, (n, dim))
    coeff = rng.uniform(0.2, 2.0, n)
    h = float(rng.uniform(0.4, 1.5))
    return GaussianMixture(PointCloud(centers), coeff, h)
