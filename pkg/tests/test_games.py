from __future__ import annotations

import itertools
import math
import warnings

import pytest
from hypothesis import assume, given, strategies as st

from magicbench.core import MagicError, Role, Scenario
from magicbench.games.social import (
    CHAMELEON_CREDITS,
    ChameleonStage,
    ChameleonState,
    CodeOutOfRange,
    MissingGuess,
    UndercoverState,
    guess_matches,
    resolve_chameleon,
    resolve_undercover,
    role_credit,
)
from magicbench.games.theory import (
    Move,
    Overdraft,
    PDScoring,
    PGLedger,
    Proposal,
    ProposalError,
    VoteForMissingProposal,
    WrongPlayerCount,
    cs_fairness_check,
    cs_resolve_round,
    pd_payoffs,
    pg_settle,
    theory_winners,
)
from magicbench.games.voting import SelfVote, UnknownTarget, tally_votes

C, D = Move.COOPERATE, Move.DEFECT
SCORING = PDScoring(3, 1, 5, 2)


# --- voting


def test_tally_plurality_and_tie():
    r = tally_votes({1: 2, 3: 2, 2: 1})
    assert r.winner == 2 and not r.is_tie
    assert tally_votes({1: 2, 2: 3, 3: 1}).top == {1, 2, 3}


def test_tally_rejects_self_vote_and_strangers():
    with pytest.raises(SelfVote):
        tally_votes({1: 1})
    with pytest.raises(UnknownTarget):
        tally_votes({1: 7}, players=(1, 2, 3))


# --- social resolution


def test_chameleon_caught_wrong_guess():
    assert resolve_chameleon({1: 3, 2: 3, 3: 1}, "France", 3, "United Kingdom") == 0


def test_chameleon_three_way_tie():
    assert resolve_chameleon({1: 2, 2: 3, 3: 1}, None, 3, "United Kingdom") == 2


def test_chameleon_right_guess_in_lower_case():
    assert resolve_chameleon({1: 3, 2: 3, 3: 1}, "united kingdom", 3, "United Kingdom") == 3


def test_chameleon_escapes():
    assert resolve_chameleon({1: 2, 2: 1, 3: 2}, None, 3, "x") == 1


def test_missing_guess():
    with pytest.raises(MissingGuess):
        resolve_chameleon({1: 3, 2: 3, 3: 1}, None, 3, "x")


@pytest.mark.parametrize("variant", ["United Kingdom", "united kingdom", "  UNITED   kingdom ", "United\tKingdom\n"])
def test_guess_normalization_accepts(variant):
    assert guess_matches(variant, "United Kingdom")


@pytest.mark.parametrize("variant", ["UnitedKingdom", "United Kingdoms", "UK", ""])
def test_guess_normalization_rejects(variant):
    assert not guess_matches(variant, "United Kingdom")


def test_undercover_examples():
    assert resolve_undercover({1: 2, 3: 2}, 2) == 1
    assert resolve_undercover({1: 2, 2: 1}, 2) == 2
    assert resolve_undercover({1: 3, 2: 3, 3: 1}, 2) == 0


def test_role_credit_examples():
    assert role_credit(Scenario.CHAMELEON, Role.CHAMELEON, 2) == 2
    assert role_credit(Scenario.UNDERCOVER, Role.CIVILIAN, 1) == 3
    assert role_credit(Scenario.CHAMELEON, Role.NON_CHAMELEON, 0) == 2


def test_role_credit_errors():
    with pytest.raises(CodeOutOfRange):
        role_credit(Scenario.UNDERCOVER, Role.UNDERCOVER, 3)
    with pytest.raises(CodeOutOfRange):
        role_credit(Scenario.PUBLIC_GOOD, Role.CONTRIBUTOR, 0)


@pytest.mark.parametrize("code", range(4))
def test_chameleon_credits_sum_to_two(code):
    assert CHAMELEON_CREDITS[Role.CHAMELEON][code] + CHAMELEON_CREDITS[Role.NON_CHAMELEON][code] == 2


def _play_chameleon(votes: dict[int, int], guess: str, chameleon: int = 3) -> ChameleonState:
    s = ChameleonState((1, 2, 3), chameleon, "Mango")
    for p in (1, 2, 3):
        s = s.give_clue(p, f"clue {p}")
    assert s.stage is ChameleonStage.ACCUSATION
    for voter, target in votes.items():
        s = s.cast_vote(voter, target)
    if s.stage is ChameleonStage.GUESS:
        s = s.make_guess(guess)
    return s


vote_maps = st.fixed_dictionaries({p: st.sampled_from([q for q in (1, 2, 3) if q != p]) for p in (1, 2, 3)})


@given(vote_maps, st.sampled_from(["Mango", "mango ", "Pear"]), st.sampled_from([1, 2, 3]))
def test_guess_stage_iff_code_zero_or_three(votes, guess, chameleon):
    s = ChameleonState((1, 2, 3), chameleon, "Mango")
    for p in (1, 2, 3):
        s = s.give_clue(p, "c")
    for v, t in votes.items():
        s = s.cast_vote(v, t)
    reached_guess = s.stage is ChameleonStage.GUESS
    if reached_guess:
        s = s.make_guess(guess)
    assert reached_guess == (s.outcome() in (0, 3))


def test_chameleon_state_guards():
    s = ChameleonState((1, 2, 3), 3, "Mango")
    with pytest.raises(MagicError):
        s.cast_vote(1, 2)
    s = s.give_clue(1, "a")
    with pytest.raises(MagicError):
        s.give_clue(1, "again")
    done = _play_chameleon({1: 2, 2: 1, 3: 1}, "x")
    assert done.stage is ChameleonStage.DONE and done.outcome() == 1
    with pytest.raises(MagicError):
        done.make_guess("late")


def test_undercover_state_flow():
    s = UndercoverState((1, 2, 3), 2, ("tea", "coffee"), rounds=2)
    assert s.word_of(2) == "coffee" and s.word_of(1) == "tea"
    with pytest.raises(MagicError):
        s.record_probe(1, True)
    for _ in range(2):
        for p in (1, 2, 3):
            s = s.give_clue(p, "x")
    assert s.clues_done
    with pytest.raises(MagicError):
        s.give_clue(1, "extra")
    s = s.record_probe(2, True)
    for v, t in {1: 2, 2: 1, 3: 2}.items():
        s = s.cast_vote(v, t)
    with pytest.raises(MagicError):
        s.record_probe(1, False)
    assert s.outcome() == 1


def test_undercover_one_clue_per_round():
    s = UndercoverState((1, 2, 3), 2, ("tea", "coffee"), rounds=2).give_clue(1, "a")
    with pytest.raises(MagicError):
        s.give_clue(1, "b")


# --- prisoner's dilemma


def _pd_oracle(profile, s):
    table = {
        (C, C, C): (s.cooperate,) * 3,
        (D, D, D): (s.defect,) * 3,
        (D, C, C): (s.one_defect, 0, 0),
        (C, D, C): (0, s.one_defect, 0),
        (C, C, D): (0, 0, s.one_defect),
        (D, D, C): (s.two_defect, s.two_defect, 0),
        (D, C, D): (s.two_defect, 0, s.two_defect),
        (C, D, D): (0, s.two_defect, s.two_defect),
    }
    return table[profile]


def test_pd_examples():
    assert pd_payoffs({1: D, 2: C, 3: C}, SCORING) == {1: 5, 2: 0, 3: 0}
    assert pd_payoffs({1: C, 2: C, 3: C}, SCORING) == {1: 3, 2: 3, 3: 3}
    assert pd_payoffs({1: D, 2: D, 3: C}, SCORING) == {1: 2, 2: 2, 3: 0}


@pytest.mark.parametrize("profile", list(itertools.product((C, D), repeat=3)))
def test_pd_exhaustive(profile):
    got = pd_payoffs(dict(zip((1, 2, 3), profile)), SCORING)
    assert tuple(got[p] for p in (1, 2, 3)) == _pd_oracle(profile, SCORING)


def test_pd_wrong_player_count():
    with pytest.raises(WrongPlayerCount):
        pd_payoffs({1: C, 2: D}, SCORING)


def test_pd_scoring_order_warns_but_is_accepted():
    with pytest.warns(UserWarning):
        s = PDScoring(1, 3, 2, 0)
    assert pd_payoffs({1: C, 2: C, 3: C}, s)[1] == 1


scorings = st.tuples(*[st.integers(0, 20)] * 4)


@given(st.tuples(*[st.sampled_from((C, D))] * 3), st.permutations([1, 2, 3]), scorings)
def test_pd_permutation_symmetry(profile, perm, scoring):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        scoring = PDScoring(*scoring)
        base = pd_payoffs(dict(zip((1, 2, 3), profile)), scoring)
        moved = pd_payoffs({perm[i]: profile[i] for i in range(3)}, scoring)
    assert all(moved[perm[i]] == base[i + 1] for i in range(3))


@given(st.integers(0, 10), st.integers(1, 10), st.integers(1, 10), st.integers(0, 10), st.sampled_from([1, 2, 3]))
def test_pd_unilateral_deviation_pays(defect, gap_c, gap_o, two, deviator):
    scoring = PDScoring(defect + gap_c, defect, defect + gap_c + gap_o, two)
    choices = {p: C for p in (1, 2, 3)}
    before = pd_payoffs(choices, scoring)[deviator]
    after = pd_payoffs({**choices, deviator: D}, scoring)[deviator]
    assert after > before


# --- public good


def test_pg_examples():
    led = PGLedger.start((1, 2, 3), 2)
    assert pg_settle({1: 10, 2: 20, 3: 30}, led).balances == {1: 130, 2: 120, 3: 110}
    assert pg_settle({1: 0, 2: 0, 3: 0}, led).balances == led.balances
    with pytest.raises(Overdraft) as err:
        pg_settle({1: 120, 2: 0, 3: 0}, led)
    assert err.value.player == 1


def test_pg_negative_contribution():
    with pytest.raises(ProposalError):
        pg_settle({1: -1, 2: 0, 3: 0}, PGLedger.start((1, 2, 3), 2))


amount = st.floats(min_value=0, max_value=20, allow_nan=False)


@given(
    st.lists(st.tuples(amount, amount, amount), min_size=1, max_size=5),
    st.floats(min_value=0.1, max_value=5, allow_nan=False),
)
def test_settle_once_matches_per_round(rounds, m):
    per_round = PGLedger.start((1, 2, 3), m)
    for r in rounds:
        per_round = pg_settle(dict(zip((1, 2, 3), r)), per_round)
    summed = {p: math.fsum(r[p - 1] for r in rounds) for p in (1, 2, 3)}
    once = pg_settle(summed, PGLedger.start((1, 2, 3), m))
    for p in (1, 2, 3):
        assert once.balances[p] == pytest.approx(per_round.balances[p], abs=1e-9)
    assert len(per_round.contributions_history) == len(rounds)


# --- cost sharing


def _prop(proposer, *shares):
    return Proposal(proposer, dict(zip((1, 2, 3), shares)))


def test_cs_consensus():
    props = [_prop(p, 30, 30, 40) for p in (1, 2, 3)]
    assert cs_resolve_round(props, {1: 2, 2: 2, 3: 2}).proposer == 2
    assert cs_resolve_round(props, {1: 1, 2: 2, 3: 2}) is None


def test_cs_vote_for_missing_proposal():
    with pytest.raises(VoteForMissingProposal):
        cs_resolve_round([_prop(1, 30, 30, 40)], {1: 1, 2: 3, 3: 1})


def test_cs_fairness_examples():
    standalone = {1: 45, 2: 40, 3: 40}
    assert cs_fairness_check(_prop(1, 50, 30, 20), standalone) == [1]
    assert cs_fairness_check(_prop(1, 50, 30, 20), None) == []
    assert cs_fairness_check(_prop(1, 30, 30, 40), standalone) == []


def test_proposal_validation():
    _prop(1, 33.33, 33.33, 33.34).validate(100, (1, 2, 3))
    _prop(1, 33.33, 33.33, 33.33).validate(100, (1, 2, 3))  # off by 0.01, inside tolerance
    with pytest.raises(ProposalError):
        _prop(1, 30, 30, 30).validate(100, (1, 2, 3))
    with pytest.raises(ProposalError):
        _prop(1, -10, 50, 60).validate(100, (1, 2, 3))
    with pytest.raises(ProposalError):
        Proposal(1, {1: 50, 2: 50}).validate(100, (1, 2, 3))


# --- winners


def test_theory_winners_examples():
    assert theory_winners({1: 25, 2: 0, 3: 0}) == {1}
    assert theory_winners({1: 10, 2: 10, 3: 10}) == {1, 2, 3}
    assert theory_winners({1: 9.95, 2: 10.0, 3: 10.0}) == {2, 3}
    with pytest.raises(ValueError):
        theory_winners({1: math.inf, 2: 0})


@given(st.dictionaries(st.integers(1, 6), st.floats(-1e6, 1e6, allow_nan=False), min_size=1))
def test_theory_winners_is_argmax(scores):
    winners = theory_winners(scores)
    assume(winners)
    top = max(scores.values())
    assert winners == {p for p, v in scores.items() if v == top}
