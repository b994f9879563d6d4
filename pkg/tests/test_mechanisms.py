import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfacility.core import Agent, Point, agent
from wfacility.instances import impossibility_instances
from wfacility.mechanisms import batch_cmp, cm, cmp, gcm, phantom_count


def test_cm_examples(three_agents):
    assert cm(three_agents.agents).facility == Point(0, 0)
    assert cm([agent(2, -3)]).facility == Point(2, -3)
    assert cm([agent(0, 0), agent(2, 2)]).facility == Point(0, 0)


def test_gcm_examples(three_agents):
    assert gcm(three_agents.agents, []) == cm(three_agents.agents)
    a, b = impossibility_instances()
    phantoms = [Point(0, 21)] * 4
    # y-values 10,10,10,10,20,21,21,21,21 -> lower median 20
    out = gcm(a.agents, phantoms)
    assert out.facility == Point(0, 20)
    assert out.phantom_count == 4 and out.augmented_size == 9
    assert gcm(b.agents, phantoms).facility == Point(0, 20)


@pytest.mark.parametrize("pred, c, m, facility", [
    ((0, 1), 0.7, 2, (0, 1)),
    ((0, 1), 0.5, 1, (0, 0)),
    ((0, 0.5), 0.7, 2, (0, 0.5)),
    ((0, 1), 0.2, 0, (0, 0)),
    ((0, -10), 0.7, 2, (0, 0)),
])
def test_cmp_examples(three_agents, pred, c, m, facility):
    out = cmp(three_agents.agents, Point(*pred), c)
    assert out.phantom_count == m
    assert out.facility == Point(*facility)


def test_cmp_invalid_confidence(three_agents):
    for c in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError, match="invalid confidence"):
            cmp(three_agents.agents, Point(0, 0), c)


def test_phantom_count_floors():
    assert phantom_count(3, 0.7) == 2
    assert phantom_count(3, 0.5) == 1
    assert phantom_count(10, 0.0) == 0


coords = st.floats(-50, 50, allow_nan=False)
pts = st.builds(Point, coords, coords)
agent_lists = st.lists(st.builds(Agent, pts, st.floats(0.1, 10)), min_size=1, max_size=15)
confs = st.floats(0, 0.999)


@given(agent_lists, pts, confs)
def test_determinism(agents, pred, c):
    assert cmp(agents, pred, c) == cmp(list(agents), pred, c)


@given(agent_lists, pts, confs, st.lists(st.floats(0.1, 10), min_size=15, max_size=15))
def test_weight_independence(agents, pred, c, new_w):
    reweighted = [Agent(a.location, w) for a, w in zip(agents, new_w)]
    assert cmp(agents, pred, c).facility == cmp(reweighted, pred, c).facility
    assert cm(agents).facility == cm(reweighted).facility


@given(agent_lists, pts)
def test_zero_confidence_is_cm(agents, pred):
    assert cmp(agents, pred, 0.0).facility == cm(agents).facility


@given(pts, st.integers(1, 10), confs)
def test_unanimity(p, n, c):
    agents = [Agent(p, 1.0)] * n
    assert cmp(agents, p, c).facility == p


@given(agent_lists, pts, confs, st.randoms())
def test_order_independence(agents, pred, c, rnd):
    shuffled = list(agents)
    rnd.shuffle(shuffled)
    assert cmp(shuffled, pred, c).facility == cmp(agents, pred, c).facility


@given(agent_lists, pts, confs)
@settings(max_examples=200)
def test_batch_matches_scalar(agents, pred, c):
    locs = np.array([[[a.location.x, a.location.y] for a in agents]])
    ws = np.array([a.weight for a in agents])
    fx, fy = batch_cmp(locs, ws, pred, c)[0]
    assert Point(fx, fy) == cmp(agents, pred, c).facility
