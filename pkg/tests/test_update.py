import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beliefrev import ContradictionError, Evidence, build_network, update_beliefs
from beliefrev import oracle
from beliefrev.update import lambda_message, node_belief, pi_message

import netgen
from conftest import two_parent_network


def log(x):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(x, float))


class TestNodeBelief:
    def test_chain_posterior(self, chain):
        res = update_beliefs(chain, Evidence({1: 1}))
        assert res.beliefs[0][1] == pytest.approx(0.18 / 0.26)
        assert res.beliefs[0][1] == pytest.approx(0.6923, abs=5e-5)
        assert np.exp(res.log_evidence) == pytest.approx(0.26)

    def test_no_evidence_prior_marginal(self, chain):
        res = update_beliefs(chain)
        np.testing.assert_allclose(res.beliefs[1], [0.8 * 0.9 + 0.2 * 0.1, 0.26])
        assert res.log_evidence == pytest.approx(0.0, abs=1e-15)

    def test_observed_node_is_indicator(self, chain):
        np.testing.assert_array_equal(update_beliefs(chain, Evidence({1: 0})).beliefs[1], [1.0, 0.0])

    def test_pure_function(self):
        bel = node_belief(log([0.8, 0.2]), [], [log([0.1, 0.9])])
        np.testing.assert_allclose(np.exp(bel), [0.08 / 0.26, 0.18 / 0.26])

    def test_contradiction(self):
        net = build_network({"variables": [
            {"name": "a", "prior": 0.0},
            {"name": "b", "parents": ["a"], "cpt": [1.0, 0.0, 0.0, 1.0]},
        ]})
        with pytest.raises(ContradictionError):
            update_beliefs(net, Evidence({1: 1}))


class TestLambdaMessage:
    def test_anticipatory_child_sends_uniform(self, collider):
        lam = lambda_message(collider.log_table(2), [log([0.5, 0.5]), log([0.1, 0.9])], [log([1, 1])], 0)
        np.testing.assert_allclose(np.exp(lam), [0.5, 0.5])

    def test_observed_single_parent(self, chain):
        lam = lambda_message(chain.log_table(1), [log([0.8, 0.2])], [log([0, 1])], 0)
        np.testing.assert_allclose(np.exp(lam), np.array([0.1, 0.9]) / 1.0)

    def test_noisy_or_false_gate_other_parent_false(self):
        q_u = 0.3
        net = build_network({"variables": [
            {"name": "u", "prior": 0.4},
            {"name": "v", "prior": 0.0},
            {"name": "x", "parents": ["u", "v"], "noisyor": [1 - q_u, 0.6]},
        ]})
        ev = Evidence({2: 0})
        res = update_beliefs(net, ev)
        lam = res.store.values(2, 0)
        assert lam[1] / lam[0] == pytest.approx(q_u)
        # against the oracle on the same evidence
        bel = oracle.exact_bel(net, ev, 0)
        assert (bel[1] / bel[0]) / (0.4 / 0.6) == pytest.approx(q_u)


class TestPiMessage:
    def test_root_prior(self, chain):
        np.testing.assert_allclose(np.exp(pi_message(chain.log_table(0), [], [log([1, 1])], None)), [0.8, 0.2])

    def test_root_prior_in_run(self, chain):
        np.testing.assert_allclose(update_beliefs(chain).store.values(0, 1), [0.8, 0.2])

    def test_observed_parent_sends_indicator(self):
        msg = pi_message(np.log([[0.3], [0.7]]).reshape(2), [], [log([0, 1]), log([0.4, 0.6])], 1)
        np.testing.assert_array_equal(np.exp(msg), [0.0, 1.0])

    def test_exclusive_child(self):
        net = build_network({"variables": [
            {"name": "a", "prior": 0.35},
            {"name": "b", "parents": ["a"], "cpt": [0.7, 0.3, 0.2, 0.8]},
            {"name": "c", "parents": ["a"], "cpt": [0.6, 0.4, 0.1, 0.9]},
        ]})
        ev = Evidence({1: 1})
        np.testing.assert_allclose(update_beliefs(net, ev).store.values(0, 2), oracle.exact_bel(net, ev, 0), atol=1e-15)


class TestAgainstOracle:
    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_beliefs(self, seed):
        rng = np.random.default_rng(seed)
        net = netgen.random_tree(rng, int(rng.integers(1, 11)), zero_prob=0.15, noisy_or_prob=0.3)
        ev = netgen.random_evidence(rng, net, virtual_prob=0.15)
        res = update_beliefs(net, ev)
        for v in range(len(net)):
            np.testing.assert_allclose(res.beliefs[v], oracle.exact_bel(net, ev, v), atol=1e-9)
        assert res.log_evidence == pytest.approx(oracle.log_evidence(net, ev), abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_message_semantics(self, seed):
        rng = np.random.default_rng(seed)
        net = netgen.random_tree(rng, int(rng.integers(2, 9)))
        ev = netgen.random_evidence(rng, net, virtual_prob=0.2)
        res = update_beliefs(net, ev)
        view = res.propagation.view
        for x in range(len(net)):
            for u in view.parents[x]:
                above, below = netgen.split_at_link(net, u, x)
                # pi_x(u) = P(u | evidence above the link)
                np.testing.assert_allclose(
                    res.store.values(u, x), oracle.exact_bel(net, netgen.restrict(ev, above), u), atol=1e-9
                )
                # lambda_x(u) is proportional to P(evidence below | u)
                below_ev = netgen.restrict(ev, below)
                prior = oracle.exact_bel(net, None, u)
                like = np.array([
                    np.exp(oracle.log_evidence(net, below_ev.with_observations({u: s}))) / prior[s]
                    if prior[s] > 0 else np.nan
                    for s in range(net.card(u))
                ])
                msg = res.store.values(x, u)
                ok = np.isfinite(like)
                np.testing.assert_allclose(msg[ok] / msg[ok].sum(), like[ok] / like[ok].sum(), atol=1e-9)


class TestAnticipatoryBarrier:
    def test_evidence_on_one_parent_leaves_the_other_alone(self):
        net = two_parent_network()
        base = update_beliefs(net).beliefs[1]
        for virtual in ([0.1, 1.0], [1.0, 0.05], [0.5, 0.5]):
            shifted = update_beliefs(net, Evidence({}, {0: virtual})).beliefs[1]
            np.testing.assert_allclose(shifted, base, atol=1e-15)
        np.testing.assert_allclose(update_beliefs(net, Evidence({0: 1})).beliefs[1], base, atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_random_trees(self, seed):
        # evidence confined to one side of an unobserved collider with
        # no evidence below it never reaches the other parent's side
        rng = np.random.default_rng(seed)
        net = netgen.random_tree(rng, int(rng.integers(3, 10)))
        colliders = [x for x in range(len(net)) if len(net.parents[x]) >= 2]
        if not colliders:
            return
        x = colliders[0]
        u, v = net.parents[x][:2]
        side_u, _ = netgen.split_at_link(net, u, x)
        side_v, _ = netgen.split_at_link(net, v, x)
        ev = netgen.random_evidence(rng, net)
        ev = netgen.restrict(ev, side_u)
        base = update_beliefs(net)
        moved = update_beliefs(net, ev)
        for w in side_v:
            np.testing.assert_allclose(moved.beliefs[w], base.beliefs[w], atol=1e-12)
