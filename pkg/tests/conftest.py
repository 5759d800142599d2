import itertools
from pathlib import Path

import numpy as np
import pytest

from src.cases.cases import Branch, Bus, BusKind, Generator, GridCase
from src.cases.parsers import load_case, parse_case_json

FIXTURES = Path(__file__).parent / 'fixtures'
PATH3 = FIXTURES / 'path3.json'


def make_two_bus(p_load=0.5, x=0.1, r=0.0, base_mva=100.0):
    """Slack bus 1 feeding a PQ load of `p_load` p.u. at bus 2 over one line."""
    return GridCase(
        base_mva=base_mva,
        buses=(Bus(1, BusKind.SLACK), Bus(2, BusKind.PQ, p_load=p_load)),
        branches=(Branch(1, 2, r=r, x=x),),
        gens=(Generator(1, q_min=-10.0, q_max=10.0),),
        name='two_bus'
    )


def make_random_case(rng, n, extra_edges=None):
    """Connected lossless case: a random spanning tree plus a few chords, slack at bus 1."""
    order = rng.permutation(n) + 1
    edges = {tuple(sorted((int(order[i]), int(order[rng.integers(0, i)])))) for i in range(1, n)}
    candidates = [pair for pair in itertools.combinations(range(1, n + 1), 2) if pair not in edges]
    extra = extra_edges if extra_edges is not None else n // 2
    for position in rng.permutation(len(candidates))[:extra]:
        edges.add(candidates[position])

    buses = tuple(
        Bus(i, BusKind.SLACK if i == 1 else BusKind.PQ, p_load=float(rng.uniform(0.0, 1.0)) if i > 1 else 0.0)
        for i in range(1, n + 1)
    )
    branches = tuple(Branch(i, j, r=0.0, x=float(rng.uniform(0.05, 0.5))) for i, j in sorted(edges))
    return GridCase(base_mva=100.0, buses=buses, branches=branches, gens=(Generator(1),), name='random')


@pytest.fixture
def path3_text():
    return PATH3.read_text(encoding='utf-8')


@pytest.fixture
def path3(path3_text):
    return parse_case_json(path3_text)


@pytest.fixture
def loaded_path3(path3):
    """path3 with 10 MW at bus 2 and 20 MW at bus 3."""
    return path3.replace_bus(2, p_load=0.1).replace_bus(3, p_load=0.2)


@pytest.fixture
def two_bus():
    return make_two_bus


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope='session')
def ieee118():
    pytest.importorskip('pypower')
    return load_case('pypower:case118')
