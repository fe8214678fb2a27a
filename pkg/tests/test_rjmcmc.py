import itertools
import math
from collections import Counter

import numpy as np
import pytest

from monodnf.core import Dataset
from monodnf.posterior import PriorConfig, ProbPair
from monodnf.rjmcmc import (
    MAX_P,
    RjState,
    birth_move,
    birth_proposal,
    death_log_q,
    death_move,
    death_proposal,
    flip_proposal,
    log_target,
    rj_step,
    run_rj,
)

from conftest import random_dataset
from oracles import dnf_marginal_posterior, dnf_space, exact_kernel, total_variation

CFG = PriorConfig(beta0=(2, 3), beta1=(3, 2), theta=1.5, p_geom=0.5)
PP = ProbPair(0.3, 0.65)


def toy(p, n=8, seed=0):
    return random_dataset(np.random.default_rng(seed), n, p, density=0.55)


def key(terms):
    return tuple(sorted(terms))


def test_death_examples():
    assert death_proposal((0b0110, 0b1100), 0, 1) == (0b1010,)
    assert death_proposal((0b11, 0b11 ^ 0b01, 0b01), 0, 1) is None  # duplicates the third term
    assert death_proposal((0b1, 0b1), 0, 1) is None  # empty result


def test_birth_examples():
    assert birth_proposal((0b101,), 0, 0b101) is None  # w = u leaves an empty partner
    assert birth_proposal((0b110,), 0, 0) is None
    assert birth_proposal((0b110, 0b010), 0, 0b100) is None  # partner duplicates
    assert birth_proposal((0b110,), 0, 0b010, max_terms=1) is None
    g = birth_proposal((0b110,), 0, 0b010)
    assert set(g) == {0b010, 0b100}
    assert death_proposal(g, 0, 1) == (0b110,)


def test_moves_need_terms():
    d = toy(2)
    with pytest.raises(ValueError):
        death_move(RjState((1,), PP, 0.0), d, CFG, np.random.default_rng(0))
    with pytest.raises(ValueError):
        birth_move(RjState((), PP, 0.0), d, CFG, np.random.default_rng(0))


@pytest.mark.parametrize("p", [1, 2, 3])
def test_birth_and_death_ratios_are_reciprocal(p):
    d = toy(p)
    checked = 0
    for f in dnf_space(p, 3):
        m = len(f)
        lt_f = log_target(f, PP, d, CFG)
        for i, j in itertools.combinations(range(m), 2):
            g = death_proposal(f, i, j)
            if g is None:
                continue
            lt_g = log_target(g, PP, d, CFG)
            death_lr = lt_g - lt_f + death_log_q(m, p)
            # the reverse birth splits the merged term (last in g) with w = f[i]
            back = birth_proposal(g, m - 2, f[i])
            assert key(back) == key(f)
            birth_lr = lt_f - lt_g - death_log_q(len(g) + 1, p)
            assert death_lr + birth_lr == pytest.approx(0.0, abs=1e-12)
            checked += 1
    assert checked > 0 or p == 1


def test_death_log_q_counting():
    # m = 2, p = 2: birth mass 2 * 2**-2 / 1, death mass 1 / C(2, 2)
    assert death_log_q(2, 2) == pytest.approx(math.log(0.5))
    assert death_log_q(3, 4) == pytest.approx(math.log(2 / 2 / 16) - math.log(1 / 3))


def test_kernel_detailed_balance_p2():
    d = toy(2, seed=3)
    for pp in (ProbPair(0.2, 0.8), ProbPair(0.5, 0.5), ProbPair(0.7, 0.4)):
        states, P, pi = exact_kernel(d, CFG, pp, max_terms=2)
        assert len(states) == 6
        flow = pi[:, None] * P
        assert np.abs(flow - flow.T).max() < 1e-10
        assert np.abs(pi @ P - pi).max() < 1e-10


def test_kernel_balance_breaks_without_counting_factor():
    """Dropping the factor 2 for the two labelings of a split must break balance."""
    d = toy(2, seed=3)
    _, P, pi = exact_kernel(d, CFG, ProbPair(0.2, 0.8), 2, log_q=lambda m, p: death_log_q(m, p) - math.log(2))
    flow = pi[:, None] * P
    assert np.abs(flow - flow.T).max() > 1e-6


def test_rj_step_kinds_and_guards():
    d = toy(3)
    rng = np.random.default_rng(1)
    state = RjState((0b011,), PP, log_target((0b011,), PP, d, CFG))
    kinds = Counter()
    for _ in range(2000):
        state, kind, acc = rj_step(state, d, CFG, rng, max_terms=3)
        kinds[kind] += 1
        assert 1 <= state.m <= 3 and len(set(state.terms)) == state.m and 0 not in state.terms
        assert state.log_post == pytest.approx(log_target(state.terms, state.pp, d, CFG))
    assert set(kinds) == {"within", "birth", "death"}


def test_run_rj_contract(tmp_path):
    d = toy(3)
    assert len(run_rj(d, CFG, iters=0, seed=0)) == 0
    a = run_rj(d, CFG, iters=500, seed=5, keep_states=True)
    b = run_rj(d, CFG, iters=500, seed=5, keep_states=True)
    assert a.states == b.states and a.log_post == b.log_post
    a.write_csv(tmp_path / "rj.csv")
    lines = (tmp_path / "rj.csv").read_text().splitlines()
    assert lines[0] == "iteration,m,logpost" and len(lines) == 501
    big = random_dataset(np.random.default_rng(0), 5, MAX_P + 1)
    with pytest.raises(ValueError):
        run_rj(big, CFG, iters=1)
    with pytest.raises(ValueError):
        run_rj(d, CFG, iters=1, move_probs=(0.5, 0.3, 0.2))


@pytest.mark.slow
def test_stationary_distribution_p2():
    d = toy(2, seed=3)
    exact = dnf_marginal_posterior(d, CFG, max_m=2)
    tr = run_rj(d, CFG, iters=1_000_000, seed=17, init_terms=(0b01,), max_terms=2, keep_states=True)
    c = Counter(key(s) for s in tr.states)
    emp = {s: v / len(tr) for s, v in c.items()}
    assert total_variation(emp, exact) < 0.05
