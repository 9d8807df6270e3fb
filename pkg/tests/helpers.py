"""Random toy instances shared by the oracle and property tests."""

import numpy as np

from jointfair import RelevanceTable, RunData


def random_instance(rng, max_m=3, max_n=5, max_k=3, max_w=2, min_k=2, full=True):
    m = int(rng.integers(1, max_m + 1))
    n = int(rng.integers(max(2, min_k), max_n + 1))
    k = int(rng.integers(min_k, min(max_k, n) + 1))
    W = int(rng.integers(1, max_w + 1))
    users = [f"u{j}" for j in range(m)]
    items = [f"i{j}" for j in range(n)]
    depth = n if full else int(rng.integers(k, n + 1))
    lists = {(u, w): [items[j] for j in rng.permutation(n)[:depth]] for u in users for w in range(1, W + 1)}
    levels = np.array([0.0, 0.0, 0.25, 0.5, 1.0]) if rng.random() < 0.5 else np.array([0.0, 1.0])
    grades = {}
    for u in users:
        for i in items:
            g = float(rng.choice(levels))
            if g > 0:
                grades[(u, i)] = g
    if not grades:
        grades[(users[0], items[int(rng.integers(n))])] = 1.0
    return dict(users=users, items=items, lists=lists, grades=grades, k=k)


def to_objects(inst):
    run = RunData.from_lists(inst["lists"], items=inst["items"])
    rel = RelevanceTable.from_dict(inst["grades"], users=inst["users"], items=inst["items"])
    return run, rel
