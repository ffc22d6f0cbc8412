"""Shared oracles and strategies.

The oracles are deliberately naive pure-Python re-implementations that share
no code with the package.
"""

from __future__ import annotations

import itertools
import random
from collections import deque

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from opinion_forge.graph import build_graph

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def naive_bfs(adj: dict[int, set[int]], sources) -> dict[int, int]:
    dist = {s: 0 for s in sources}
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def naive_diffusion(n, edges, seeds: dict[int, str], rounds=None, tie="black", coin=None):
    """Round-by-round majority process on plain dicts.

    ``seeds`` maps node -> 'B' | 'W'; ``tie`` is 'black', 'white' or 'coin'
    (then ``coin()`` returns True for Black).  Returns the list of color
    dicts after each round.
    """
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    color = dict(seeds)
    history = [dict(color)]
    t = 0
    while rounds is None or t < rounds:
        updates = {}
        for y in range(n):
            if y in color:
                continue
            b = sum(1 for z in adj[y] if color.get(z) == "B")
            w = sum(1 for z in adj[y] if color.get(z) == "W")
            if b + w == 0:
                continue
            if b > w:
                updates[y] = "B"
            elif w > b:
                updates[y] = "W"
            elif tie == "black":
                updates[y] = "B"
            elif tie == "white":
                updates[y] = "W"
            else:
                updates[y] = "B" if coin() else "W"
        if not updates:
            break
        color.update(updates)
        history.append(dict(color))
        t += 1
    return history


def to_adj(n, edges):
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


@st.composite
def random_graphs(draw, min_n=1, max_n=14, connected=False):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    edges = list(chosen)
    if connected:
        order = draw(st.permutations(range(n)))
        for i in range(1, n):
            parent = order[draw(st.integers(0, i - 1))]
            edges.append((min(parent, order[i]), max(parent, order[i])))
    return n, edges


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_connected_graph(n, extra, seed):
    r = random.Random(seed)
    edges = set()
    for v in range(1, n):
        u = r.randrange(v)
        edges.add((u, v))
    for _ in range(extra):
        u, v = r.sample(range(n), 2)
        edges.add((min(u, v), max(u, v)))
    return build_graph(n, sorted(edges))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, detail = RESULTS[number]
        terminalreporter.write_line(f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'} - {detail}")
