import math

import numpy as np
import pytest

from disctag.automata import build_lattice, grammar_automaton
from disctag.errors import IllFormed
from disctag.inference import (
    LOG,
    TROPICAL,
    PartialLabelSet,
    clamped_log_partition,
    clamped_marginals,
    forward,
    hard_em_step,
    marginals,
    nll,
    partial_nll,
    sequence_score,
    viterbi,
)
from disctag.scheme import (
    CB,
    NUM_TAGS,
    O,
    Mention,
    TagSequence,
    decode,
    encode,
    is_well_formed,
    to_two_layer,
)

GRAMMAR = grammar_automaton("semantic")


def lat(n):
    return build_lattice(GRAMMAR, n)


def brute_scores(language, n, w):
    """Scores of every well-formed sequence, by exhaustive enumeration."""
    seqs = language.sequences(n)
    idx = np.array([[t.index for t in seq] for seq in seqs])
    return seqs, w[np.arange(n), idx].sum(axis=1)


def random_weights(rng, n, scale=2.0):
    return rng.uniform(-scale, scale, size=(n, NUM_TAGS))


class TestSemirings:
    @pytest.mark.parametrize("sr", [TROPICAL, LOG], ids=lambda s: s.name)
    def test_identities_and_laws(self, sr):
        xs = np.array([-2.0, 0.0, 1.5])
        assert np.allclose(sr.plus(xs, sr.zero), xs)
        assert np.allclose(sr.times(xs, sr.one), xs)
        a, b, c = 0.3, -1.2, 2.2
        assert np.isclose(sr.plus(a, sr.plus(b, c)), sr.plus(sr.plus(a, b), c))
        assert np.isclose(sr.times(a, sr.plus(b, c)), sr.plus(sr.times(a, b), sr.times(a, c)))


class TestViterbi:
    def test_two_candidate_max(self):
        w = np.full((1, NUM_TAGS), -5.0)
        w[0, O.index] = 1.0
        w[0, CB.index] = 0.0
        score, ts = viterbi(lat(1), w)
        assert score == 1.0
        assert ts.tags == (O,)

    def test_zero_weights_canonical_tie_break(self):
        score, ts = viterbi(lat(3), np.zeros((3, NUM_TAGS)))
        assert score == 0.0
        # lowest tag index wins at every position, left to right
        assert ts.symbols() == "CB CB CB"

    @pytest.mark.parametrize("n", range(1, 6))
    def test_matches_brute_force(self, language, n):
        rng = np.random.default_rng(100 + n)
        for _ in range(25):
            w = random_weights(rng, n)
            seqs, scores = brute_scores(language, n, w)
            score, ts = viterbi(lat(n), w)
            assert score == scores.max()
            assert tuple(ts) in set(seqs)
            assert is_well_formed(ts)
            assert sequence_score(w, ts) == score

    def test_shift_invariance(self):
        rng = np.random.default_rng(5)
        w = random_weights(rng, 6)
        score, ts = viterbi(lat(6), w)
        score2, ts2 = viterbi(lat(6), w + 3.25)
        assert ts2.tags == ts.tags
        assert np.isclose(score2, score + 6 * 3.25)


class TestForward:
    def test_uniform_counts(self):
        assert forward(lat(1), np.zeros((1, NUM_TAGS))) == pytest.approx(math.log(2), abs=1e-12)
        assert forward(lat(2), np.zeros((2, NUM_TAGS))) == pytest.approx(math.log(5), abs=1e-12)

    @pytest.mark.parametrize("n", range(1, 6))
    def test_matches_brute_force(self, language, n):
        rng = np.random.default_rng(200 + n)
        for _ in range(25):
            w = random_weights(rng, n)
            _, scores = brute_scores(language, n, w)
            expected = scores.max() + np.log(np.exp(scores - scores.max()).sum())
            assert forward(lat(n), w) == pytest.approx(expected, abs=1e-6)

    def test_sandwich_bounds(self, language):
        rng = np.random.default_rng(11)
        for n in (2, 4, 6):
            w = random_weights(rng, n)
            v, _ = viterbi(lat(n), w)
            a = forward(lat(n), w)
            assert v <= a <= v + math.log(len(language.sequences(n))) + 1e-9

    def test_shift_adds_nc(self):
        rng = np.random.default_rng(12)
        w = random_weights(rng, 5)
        assert forward(lat(5), w + 1.5) == pytest.approx(forward(lat(5), w) + 5 * 1.5)


def central_difference(f, w, eps=1e-3):
    grad = np.zeros_like(w)
    for i in range(w.shape[0]):
        for t in range(w.shape[1]):
            up, down = w.copy(), w.copy()
            up[i, t] += eps
            down[i, t] -= eps
            grad[i, t] = (f(up) - f(down)) / (2 * eps)
    return grad


def assert_close_to_fd(analytic, fd, rtol=1e-4):
    denom = np.maximum(np.abs(fd), 1.0)
    assert np.all(np.abs(analytic - fd) / denom <= rtol)


class TestMarginals:
    def test_two_path_posterior(self):
        m = marginals(lat(1), np.zeros((1, NUM_TAGS)))
        assert m[0, O.index] == pytest.approx(0.5)
        assert m[0, CB.index] == pytest.approx(0.5)
        assert m.sum() == pytest.approx(1.0)
        used = {O.index, CB.index}
        for t in range(NUM_TAGS):
            if t not in used:
                assert m[0, t] == 0.0

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(31)
        w = random_weights(rng, 7)
        m = marginals(lat(7), w)
        assert np.allclose(m.sum(axis=1), 1.0, atol=1e-9)
        assert np.all((m >= 0) & (m <= 1))

    @pytest.mark.parametrize("n", [2, 5, 8])
    def test_gradient_of_forward(self, n):
        rng = np.random.default_rng(40 + n)
        w = random_weights(rng, n)
        fd = central_difference(lambda v: forward(lat(n), v), w)
        assert_close_to_fd(marginals(lat(n), w), fd)

    def test_shift_invariance(self):
        rng = np.random.default_rng(17)
        w = random_weights(rng, 4)
        assert np.allclose(marginals(lat(4), w), marginals(lat(4), w + 2.0), atol=1e-9)


def annotation_with_sets(k, resolved=()):
    """k disjoint two-fragment mentions, each its own unresolved set."""
    mentions = [Mention(((4 * i, 4 * i), (4 * i + 2, 4 * i + 2))) for i in range(k)]
    n = max(4 * k, 1)
    ann = to_two_layer(mentions, n)
    if resolved:
        from disctag.scheme import SentenceAnnotation, TwoLayerSet

        sets = tuple(
            TwoLayerSet(s.components, resolved=(i in resolved))
            for i, s in enumerate(ann.sets)
        )
        ann = SentenceAnnotation(ann.n, ann.continuous, sets)
    return ann


class TestPartialLabelSet:
    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_two_to_the_k_members(self, k):
        pl = PartialLabelSet.from_annotation(annotation_with_sets(k))
        assert len(pl) == 2**k
        assert len({decode(m) for m in pl.members}) == 1
        assert all(is_well_formed(m) for m in pl.members)
        assert len({m.tags for m in pl.members}) == 2**k

    def test_resolved_sets_do_not_flip(self):
        pl = PartialLabelSet.from_annotation(annotation_with_sets(2, resolved={0}))
        assert len(pl) == 2

    def test_canonical_order_starts_unflipped(self):
        ann = annotation_with_sets(2)
        pl = PartialLabelSet.from_annotation(ann)
        assert pl.members[0].tags == encode(ann).tags


class TestClampedLogPartition:
    def test_single_member_is_its_score(self):
        ann = annotation_with_sets(0)
        # all-continuous annotation: one admissible sequence
        pl = PartialLabelSet.from_annotation(ann)
        w = np.random.default_rng(3).uniform(-1, 1, (ann.n, NUM_TAGS))
        assert clamped_log_partition(pl, w) == pytest.approx(sequence_score(w, pl.members[0]))

    def test_symmetric_weights_add_log2(self):
        ann = annotation_with_sets(1)
        pl = PartialLabelSet.from_annotation(ann)
        w = np.zeros((ann.n, NUM_TAGS))  # symmetric under the x<->y tag swap
        member = sequence_score(w, pl.members[0])
        assert clamped_log_partition(pl, w) == pytest.approx(member + math.log(2))

    def test_matches_explicit_enumeration(self):
        ann = annotation_with_sets(2)
        pl = PartialLabelSet.from_annotation(ann)
        rng = np.random.default_rng(9)
        w = rng.uniform(-2, 2, (ann.n, NUM_TAGS))
        scores = np.array([sequence_score(w, m) for m in pl.members])
        expected = scores.max() + np.log(np.exp(scores - scores.max()).sum())
        assert clamped_log_partition(pl, w) == pytest.approx(expected, abs=1e-9)

    def test_gradient_matches_fd(self):
        ann = annotation_with_sets(2)
        pl = PartialLabelSet.from_annotation(ann)
        rng = np.random.default_rng(13)
        w = rng.uniform(-1, 1, (ann.n, NUM_TAGS))
        fd = central_difference(lambda v: clamped_log_partition(pl, v), w)
        assert_close_to_fd(clamped_marginals(pl, w), fd)


class TestNll:
    def test_value_at_zero_weights(self):
        gold = TagSequence.from_symbols("O")
        loss, grad = nll(lat(1), np.zeros((1, NUM_TAGS)), gold)
        assert loss == pytest.approx(math.log(2))
        assert grad.shape == (1, NUM_TAGS)

    def test_loss_vanishes_on_dominant_gold(self):
        gold = TagSequence.from_symbols("CB CI O")
        w = np.full((3, NUM_TAGS), -30.0)
        w[np.arange(3), gold.indices] = 30.0
        loss, _ = nll(lat(3), w, gold)
        assert 0 <= loss < 1e-9

    def test_rejects_ill_formed_gold(self):
        with pytest.raises(IllFormed):
            nll(lat(2), np.zeros((2, NUM_TAGS)), TagSequence.from_symbols("O CI"))

    def test_gradient_matches_fd(self):
        gold = TagSequence.from_symbols("O CB CI O DB-Bx DI-O DI-By")
        rng = np.random.default_rng(21)
        w = rng.uniform(-1, 1, (7, NUM_TAGS))
        fd = central_difference(lambda v: nll(lat(7), v, gold)[0], w)
        assert_close_to_fd(nll(lat(7), w, gold)[1], fd)


class TestPartialNll:
    def test_reduces_to_nll_on_single_member(self):
        ann = annotation_with_sets(0)
        pl = PartialLabelSet.from_annotation(ann)
        rng = np.random.default_rng(2)
        w = rng.uniform(-1, 1, (ann.n, NUM_TAGS))
        ploss, pgrad = partial_nll(lat(ann.n), w, pl)
        floss, fgrad = nll(lat(ann.n), w, pl.members[0])
        assert ploss == pytest.approx(floss)
        assert np.allclose(pgrad, fgrad)

    def test_nonnegative_and_below_any_member_nll(self):
        ann = annotation_with_sets(2)
        pl = PartialLabelSet.from_annotation(ann)
        rng = np.random.default_rng(23)
        for _ in range(20):
            w = rng.uniform(-3, 3, (ann.n, NUM_TAGS))
            loss, _ = partial_nll(lat(ann.n), w, pl)
            assert loss >= 0
            for member in pl.members:
                assert loss <= nll(lat(ann.n), w, member)[0] + 1e-9

    def test_gradient_matches_fd(self):
        ann = annotation_with_sets(2)
        pl = PartialLabelSet.from_annotation(ann)
        rng = np.random.default_rng(29)
        w = rng.uniform(-1, 1, (ann.n, NUM_TAGS))
        fd = central_difference(lambda v: partial_nll(lat(ann.n), v, pl)[0], w)
        assert_close_to_fd(partial_nll(lat(ann.n), w, pl)[1], fd)


class TestHardEm:
    def test_single_member_equals_nll(self):
        ann = annotation_with_sets(0)
        pl = PartialLabelSet.from_annotation(ann)
        w = np.random.default_rng(4).uniform(-1, 1, (ann.n, NUM_TAGS))
        loss, grad, chosen = hard_em_step(lat(ann.n), w, pl)
        floss, fgrad = nll(lat(ann.n), w, pl.members[0])
        assert chosen.tags == pl.members[0].tags
        assert loss == floss and np.array_equal(grad, fgrad)

    def test_picks_first_on_ties_and_max_otherwise(self):
        ann = annotation_with_sets(1)
        pl = PartialLabelSet.from_annotation(ann)
        w = np.zeros((ann.n, NUM_TAGS))
        _, _, chosen = hard_em_step(lat(ann.n), w, pl)
        assert chosen.tags == pl.members[0].tags  # tie: canonical member
        rng = np.random.default_rng(6)
        for _ in range(10):
            w = rng.uniform(-2, 2, (ann.n, NUM_TAGS))
            _, _, chosen = hard_em_step(lat(ann.n), w, pl)
            best = max(sequence_score(w, m) for m in pl.members)
            assert sequence_score(w, chosen) == best
