"""Vectorised measures against the brute-force oracle on random toy instances."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from helpers import random_instance, to_objects
from jointfair import evaluate


def _expected(inst, **cfg):
    return oracle.all_measures(inst["users"], inst["items"], inst["lists"], inst["grades"], inst["k"], **cfg)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_full_rankings(seed):
    inst = random_instance(np.random.default_rng(seed))
    run, rel = to_objects(inst)
    got = evaluate(run, rel, k=inst["k"]).scores
    exp = _expected(inst)
    for name, value in exp.items():
        assert got[name] == pytest.approx(value, abs=1e-9), name


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.01, 0.5))
def test_other_parameters(seed, g_hd, g_iif, tau):
    inst = random_instance(np.random.default_rng(seed))
    run, rel = to_objects(inst)
    got = evaluate(run, rel, k=inst["k"], gamma_hd=g_hd, gamma_iif=g_iif, impact_threshold=tau).scores
    exp = _expected(inst, gamma_hd=g_hd, gamma_iif=g_iif, tau=tau)
    for name, value in exp.items():
        assert got[name] == pytest.approx(value, abs=1e-9), name


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_truncated_runs(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, full=False, min_k=1)
    run, rel = to_objects(inst)
    got = evaluate(run, rel, k=inst["k"], skip_unavailable=True).scores
    args = inst["users"], inst["items"], inst["lists"], inst["grades"], inst["k"]
    exp = {**oracle.rel_scores(*args), **oracle.fair_scores(inst["items"], inst["lists"], inst["k"])}
    exp["IFD_mul"] = oracle.ifd_mul(*args)
    exp["HD"] = oracle.hd(*args, 0.9)
    exp["MME"] = oracle.mme(*args)
    exp["II-F"] = oracle.iif(*args, 0.8)
    exp["AI-F"] = oracle.aif(*args, 0.8)
    exp["IBO"], exp["IWO"] = oracle.ibo_iwo(*args, 0.1)
    if inst["k"] >= 2:
        exp["IAA"] = oracle.iaa(*args)
    for name, value in exp.items():
        assert got[name] == pytest.approx(value, abs=1e-9), name
