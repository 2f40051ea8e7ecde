import numpy as np
import pytest

from a2l.reduction import A2L, ProtocolError, WEIGHT_RULES, update_running_mean


class ScriptedLearner:
    """Inner stub that plays a fixed strategy script and records feedback."""

    def __init__(self, script):
        self.script = [np.asarray(x, dtype=float) for x in script]
        self.d = len(self.script[0])
        self.k = 0
        self.seen = []

    def next_strategy(self):
        x = self.script[self.k]
        self.k += 1
        return x

    def observe(self, u):
        self.seen.append(np.asarray(u, dtype=float))


def literal_recovery(avg_utils, weights):
    """Oracle: the defining formula u^t = (W_t ubar^t - sum_{k<t} a_k u^k) / a_t."""
    wfun = WEIGHT_RULES[weights]
    out = []
    cum = np.zeros_like(avg_utils[0])
    cumw = 0.0
    for t, ubar in enumerate(avg_utils, start=1):
        a = wfun(t)
        cumw += a
        u = (cumw * ubar - cum) / a
        cum = cum + a * u
        out.append(u)
    return out


def test_first_round_plays_inner_strategy():
    inner = ScriptedLearner([[0.2, 0.8]])
    wrap = A2L(inner)
    assert np.array_equal(wrap.next_strategy(), [0.2, 0.8])


def test_uniform_average_of_two_points():
    inner = ScriptedLearner([[1.0, 0.0], [0.0, 1.0]])
    wrap = A2L(inner)
    wrap.next_strategy()
    wrap.observe(np.zeros(2))
    assert np.allclose(wrap.next_strategy(), [0.5, 0.5])


def test_linear_weighted_average_of_two_points():
    inner = ScriptedLearner([[1.0, 0.0], [0.0, 1.0]])
    wrap = A2L(inner, weights="linear")
    wrap.next_strategy()
    wrap.observe(np.zeros(2))
    assert np.allclose(wrap.next_strategy(), [1 / 3, 2 / 3], atol=1e-15)


def test_uniform_average_matches_arithmetic_mean():
    rng = np.random.default_rng(0)
    script = [rng.dirichlet(np.ones(4)) for _ in range(50)]
    inner = ScriptedLearner(script)
    wrap = A2L(inner)
    for t in range(1, 51):
        played = wrap.next_strategy()
        assert np.abs(played - np.mean(script[:t], axis=0)).max() < 1e-12
        wrap.observe(rng.uniform(size=4))


def test_recovery_first_round_passthrough():
    inner = ScriptedLearner([[0.5, 0.5]])
    wrap = A2L(inner)
    wrap.next_strategy()
    u = wrap.observe(np.array([0.3, 0.9]))
    assert np.array_equal(u, [0.3, 0.9])
    assert np.array_equal(inner.seen[0], [0.3, 0.9])


def test_recovery_second_round_doubles_and_subtracts():
    inner = ScriptedLearner([[1, 0], [1, 0]])
    wrap = A2L(inner)
    wrap.next_strategy()
    wrap.observe(np.array([0.2, 0.8]))
    wrap.next_strategy()
    u = wrap.observe(np.array([0.3, 0.7]))
    assert np.allclose(u, [0.4, 0.6], atol=1e-15)


def test_constant_feedback_recovers_constant():
    inner = ScriptedLearner([[0.5, 0.5]] * 30)
    wrap = A2L(inner)
    c = np.array([0.25, 0.75])
    for _ in range(30):
        wrap.next_strategy()
        wrap.observe(c)
    for u in inner.seen:
        assert np.abs(u - c).max() < 1e-12


@pytest.mark.parametrize("weights", ["uniform", "linear"])
def test_recovery_matches_literal_formula(weights):
    rng = np.random.default_rng(1)
    avg_utils = [rng.uniform(-1, 1, size=3) for _ in range(200)]
    inner = ScriptedLearner([rng.dirichlet(np.ones(3)) for _ in range(200)])
    wrap = A2L(inner, weights=weights)
    for ubar in avg_utils:
        wrap.next_strategy()
        wrap.observe(ubar)
    want = literal_recovery(avg_utils, weights)
    for got, exp in zip(inner.seen, want):
        assert np.abs(got - exp).max() < 1e-9


def test_cum_recovered_tracks_weighted_sum():
    rng = np.random.default_rng(2)
    inner = ScriptedLearner([rng.dirichlet(np.ones(2)) for _ in range(20)])
    wrap = A2L(inner, weights="linear")
    for t in range(1, 21):
        wrap.next_strategy()
        wrap.observe(rng.uniform(size=2))
    want = sum(t * u for t, u in enumerate(inner.seen, start=1))
    assert np.abs(wrap.cum_recovered - want).max() < 1e-9


def test_protocol_strict_alternation():
    inner = ScriptedLearner([[1, 0], [1, 0]])
    wrap = A2L(inner)
    with pytest.raises(ProtocolError):
        wrap.observe(np.zeros(2))
    wrap.next_strategy()
    with pytest.raises(ProtocolError):
        wrap.next_strategy()
    wrap.observe(np.zeros(2))  # back in sync


def test_weight_rules():
    with pytest.raises(ValueError):
        A2L(ScriptedLearner([[1, 0]]), weights="exponential")
    wrap = A2L(ScriptedLearner([[1, 0], [0, 1]]), weights=lambda t: 2.0 * t)
    wrap.next_strategy()
    wrap.observe(np.zeros(2))
    # alpha = (2, 4): weighted mean (2*x1 + 4*x2) / 6
    assert np.allclose(wrap.next_strategy(), [1 / 3, 2 / 3])


def test_running_mean_helper():
    assert np.array_equal(update_running_mean(None, np.array([1.0]), 1.0, 1.0), [1.0])
    avg = update_running_mean(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 1.0, 2.0)
    assert np.allclose(avg, [0.5, 0.5])
