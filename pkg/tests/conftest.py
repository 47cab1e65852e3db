"""Shared fixtures: the hand-built stores plus one small generated scene."""

from __future__ import annotations

from typing import NamedTuple

import pytest

from trajseek import build_index, datagen
from trajseek.core import SegmentStore
from trajseek.index import TemporalIndex

from fixtures import fifteen_segment_store, sixty_query_store


class Scene(NamedTuple):
    store: SegmentStore
    index: TemporalIndex
    queries: SegmentStore
    d: float


@pytest.fixture(scope="session")
def fifteen_store():
    return fifteen_segment_store()


@pytest.fixture(scope="session")
def four_bin_index(fifteen_store):
    return build_index(fifteen_store, 4)


@pytest.fixture(scope="session")
def sixty_queries():
    return sixty_query_store()


@pytest.fixture(scope="session")
def small_scene():
    """One modest generated dataset reused by engine and planner tests.

    Returns (store, index, queries, d) sized so a full brute-force sweep
    stays well under a second.
    """
    store = datagen.generate(datagen.make_profile("uniform", 6, seed=3, timesteps=150))
    index = build_index(store, 60)
    pool = datagen.generate(datagen.make_profile("uniform", 6, seed=8, timesteps=150))
    queries = datagen.sample_queries(pool, 2, seed=11)
    return Scene(store, index, queries, 20.0)
