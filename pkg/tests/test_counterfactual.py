import itertools
from fractions import Fraction

import numpy as np
import pytest

from src.beliefs import TranslucentType, expected_utility_cooperate, expected_utility_deviation
from src.counterfactual import (
    CounterfactualStructure,
    build_coherent_structure,
    build_nash_structure,
    build_typed_pd_structure,
    build_typed_structure,
    derived_beliefs,
    eu_at_state,
    eu_at_state_switch,
    is_rational_at,
    structure_from_document,
    structure_to_document,
    validate_structure,
)
from src.errors import IncoherentProfileError, NotNashError, StructureError
from src.games import (
    MixedProfile,
    expected_payoff,
    make_bertrand,
    make_prisoners_dilemma,
    make_public_goods,
    make_travelers_dilemma,
    table_game,
)

MATCHING_PENNIES = [[[1, -1], [-1, 1]], [[-1, 1], [1, -1]]]


def _pennies():
    game = table_game([["H", "T"], ["H", "T"]], MATCHING_PENNIES)
    sigma = MixedProfile.from_mappings(game, [{"H": 0.5, "T": 0.5}, {"H": 0.5, "T": 0.5}])
    return game, sigma


def _with(m, closest=None, beliefs=None):
    """复制结构并替换 closest / beliefs，用来植入缺陷"""
    return CounterfactualStructure(
        m.game,
        m.profiles,
        closest if closest is not None else [np.array(c) for c in m.closest],
        beliefs if beliefs is not None else [np.array(b) for b in m.beliefs],
        aux=m.aux,
    )


class TestNashStructure:
    def test_pd_defection(self, pd):
        m = build_nash_structure(pd, MixedProfile.pure(pd.game, ("D", "D")))
        assert set(m.profiles) == {("D", "D"), ("C", "D"), ("D", "C"), ("C", "C")}
        assert validate_structure(m) == []
        for w in range(m.num_states):
            for i in range(2):
                assert is_rational_at(m, i, w).rational, (m.profiles[w], i)

    def test_off_support_states_use_anchors(self, pd):
        m = build_nash_structure(pd, MixedProfile.pure(pd.game, ("D", "D")))
        w = m.state_index(("C", "D"))
        assert m.beliefs[0][w, m.state_index(("C", "C"))] == 1.0
        report = is_rational_at(m, 0, w)
        assert report.eu == 3.0
        assert report.eu_switch["D"] == 0.0

    @pytest.mark.parametrize(
        "make",
        [
            lambda: make_public_goods(2, 0.75, grid=4),
            lambda: make_public_goods(3, 0.5, grid=2),
            lambda: make_travelers_dilemma(2, 6, 2),
            lambda: make_bertrand(2, 2, 6),
        ],
    )
    def test_every_state_rational(self, make):
        d = make()
        sigma = MixedProfile.pure(d.game, d.nash_profile)
        m = build_nash_structure(d, sigma)
        assert validate_structure(m) == []
        for w in range(m.num_states):
            for i in d.game.players:
                assert is_rational_at(m, i, w).rational, (m.profiles[w], i)

    def test_opaque_switch_on_support(self, pd):
        sigma = MixedProfile.pure(pd.game, ("D", "D"))
        m = build_nash_structure(pd, sigma)
        for w, profile in enumerate(m.profiles):
            for i in range(2):
                if profile[i] != "D":
                    continue
                for s in ("C", "D"):
                    assert eu_at_state_switch(m, i, w, s) == float(expected_payoff(pd.game, i, s, sigma))

    def test_matching_pennies(self):
        game, sigma = _pennies()
        m = build_nash_structure(game, sigma)
        assert m.num_states == 4
        assert validate_structure(m) == []
        for w in range(4):
            for i in range(2):
                assert is_rational_at(m, i, w).rational

    def test_switch_is_standard_deviation(self):
        game, sigma = _pennies()
        m = build_nash_structure(game, sigma)
        w = m.state_index(("H", "T"))
        assert eu_at_state_switch(m, 0, w, "T") == pytest.approx(float(expected_payoff(game, 0, "T", sigma)))

    def test_rejects_non_nash(self, pd):
        with pytest.raises(NotNashError):
            build_nash_structure(pd, MixedProfile.pure(pd.game, ("C", "C")))


class TestCoherentStructure:
    def test_pd_cooperation(self, pd):
        m = build_coherent_structure(pd, MixedProfile.pure(pd.game, ("C", "C")))
        assert validate_structure(m) == []
        w = m.state_index(("C", "C"))
        for i in range(2):
            assert is_rational_at(m, i, w).rational

    def test_pd_incoherent(self, pd):
        with pytest.raises(IncoherentProfileError) as info:
            build_coherent_structure(pd, MixedProfile.pure(pd.game, ("C", "D")))
        assert info.value.witness == (0, "C", "D")

    def test_td_high_claims_punished_with_floor(self, small_td):
        m = build_coherent_structure(small_td, MixedProfile.pure(small_td.game, (10, 10)))
        assert validate_structure(m) == []
        w = m.state_index((10, 10))
        assert is_rational_at(m, 0, w).rational
        target = m.closest[0][w, m.game.index_of(0, 9)]
        assert m.profiles[target] == (9, 2)


class TestValidation:
    def test_planted_cs1(self, pd):
        m = build_nash_structure(pd, MixedProfile.pure(pd.game, ("D", "D")))
        closest = [np.array(c) for c in m.closest]
        w = m.state_index(("D", "D"))
        closest[0][w, 0] = w
        violations = validate_structure(_with(m, closest=closest))
        assert [(v.axiom, v.state, v.player) for v in violations] == [("CS1", w, 0)]

    def test_planted_pr1(self, pd):
        m = build_nash_structure(pd, MixedProfile.pure(pd.game, ("D", "D")))
        beliefs = [np.array(b) for b in m.beliefs]
        w, other = m.state_index(("D", "D")), m.state_index(("C", "D"))
        beliefs[0][w] = 0.0
        beliefs[0][w, w] = 0.5
        beliefs[0][w, other] = 0.5
        violations = validate_structure(_with(m, beliefs=beliefs))
        assert ("PR1", w, 0) in [(v.axiom, v.state, v.player) for v in violations]

    def test_unnormalized_beliefs(self, pd):
        m = build_nash_structure(pd, MixedProfile.pure(pd.game, ("D", "D")))
        beliefs = [np.array(b) for b in m.beliefs]
        beliefs[1][0, 0] = 0.9
        assert "NORM" in {v.axiom for v in validate_structure(_with(m, beliefs=beliefs))}

    def test_shape_errors(self, pd):
        m = build_nash_structure(pd, MixedProfile.pure(pd.game, ("D", "D")))
        with pytest.raises(StructureError, match="形状"):
            _with(m, closest=[np.zeros((2, 2), dtype=int), np.array(m.closest[1])])


class TestDerivedBeliefs:
    def test_own_strategy_is_identity(self):
        m = build_typed_pd_structure(0.5, 0.5, 0.5, 0.5, 4, 1)
        for w in range(m.num_states):
            own = m.profiles[w][0]
            assert np.allclose(derived_beliefs(m, 0, w, own), m.beliefs[0][w])

    def test_point_mass(self, pd):
        m = build_nash_structure(pd, MixedProfile.pure(pd.game, ("D", "D")))
        w = m.state_index(("D", "D"))
        pushed = derived_beliefs(m, 0, w, "C")
        assert pushed[m.state_index(("C", "D"))] == pytest.approx(1.0)
        assert eu_at_state(m, 0, w) == 0
        assert eu_at_state_switch(m, 0, w, "C") == -1

    def test_deviation_reweights_opponent_cooperation(self):
        alpha, beta = 0.3, 0.6
        m = build_typed_pd_structure(alpha, alpha, beta, beta, 4, 1)
        w = m.state_index(("C", "C"), (0, 0))
        pushed = derived_beliefs(m, 0, w, "D")
        opponent_c = sum(pushed[t] for t, p in enumerate(m.profiles) if p[1] == "C")
        assert opponent_c == pytest.approx((1 - alpha) * beta)


class TestTypedPDStructure:
    def test_sixteen_states(self):
        m = build_typed_pd_structure(0.5, 0.5, 0.5, 0.5, 4, 1)
        assert m.num_states == 16
        assert validate_structure(m) == []

    def test_boundary_example(self):
        m = build_typed_pd_structure(0.5, 0.5, 0.5, 0.5, 4, 1)
        w = m.state_index(("C", "C"), (0, 0))
        report = is_rational_at(m, 0, w)
        assert report.eu == pytest.approx(1.0)
        assert report.eu_switch["D"] == pytest.approx(1.0)
        assert report.rational

    def test_opacity(self):
        m = build_typed_pd_structure(0, 0, 0.5, 0.5, 4, 1)
        w = m.state_index(("C", "C"), (0, 0))
        assert not is_rational_at(m, 0, w).rational
        assert not is_rational_at(m, 1, w).rational

    def test_matches_predicate_and_beliefs_module(self):
        grid = [Fraction(k, 4) for k in (0, 1, 2, 4)]
        for b in (2, 4):
            pd = make_prisoners_dilemma(b, 1)
            for a1, a2, b1, b2 in itertools.product(grid, repeat=4):
                m = build_typed_pd_structure(a1, a2, b1, b2, b, 1)
                for w, profile in enumerate(m.profiles):
                    for i, alpha, beta_other in ((0, a1, b2), (1, a2, b1)):
                        # 背叛总是理性的，合作当且仅当 alpha_i beta_{-i} b >= c
                        expected = profile[i] == "D" or alpha * beta_other * b >= 1
                        assert is_rational_at(m, i, w).rational == expected, (a1, a2, b1, b2, b, w, i)
                w = m.state_index(("C", "C"), (0, 0))
                for i, alpha, beta_other in ((0, a1, b2), (1, a2, b1)):
                    report = is_rational_at(m, i, w)
                    t = TranslucentType(alpha, beta_other)
                    assert report.eu == pytest.approx(float(expected_utility_cooperate(pd, i, t)), abs=1e-12)
                    assert report.eu_switch["D"] == pytest.approx(
                        float(expected_utility_deviation(pd, i, t, "D")), abs=1e-12
                    )


class TestTypedExtension:
    def test_public_goods_structure_is_valid(self):
        d = make_public_goods(2, 0.75, grid=2)
        m = build_typed_structure(d, [0.5, 0.5], [0.5, 1])
        assert m.num_states == 32
        assert validate_structure(m) == []

    def test_eu_matches_beliefs_module(self):
        d = make_public_goods(3, 0.6, grid=2)
        m = build_typed_structure(d, [0.5] * 3, [0.5] * 3)
        one = Fraction(1)
        w = m.state_index((one, one, one), (0, 0, 0))
        t = TranslucentType(0.5, 0.5)
        report = is_rational_at(m, 0, w)
        assert report.eu == pytest.approx(float(expected_utility_cooperate(d, 0, t)), abs=1e-12)
        assert report.eu_switch[Fraction(0)] == pytest.approx(float(expected_utility_deviation(d, 0, t, 0)), abs=1e-12)


class TestDocuments:
    def test_exported_structure_validates(self, pd):
        m = build_nash_structure(pd, MixedProfile.pure(pd.game, ("D", "D")))
        parsed = structure_from_document(structure_to_document(m, pd))
        assert parsed.num_states == m.num_states
        assert validate_structure(parsed) == []

    def test_missing_field(self):
        with pytest.raises(StructureError, match=r"\$: 缺少字段 'beliefs'"):
            structure_from_document({"game": {"kind": "pd", "params": {"b": 4, "c": 1}}, "states": [], "closest": []})

    def test_bad_state_index(self, pd):
        doc = structure_to_document(build_nash_structure(pd, MixedProfile.pure(pd.game, ("D", "D"))), pd)
        doc["closest"][0]["target"] = 99
        with pytest.raises(StructureError, match=r"\$\.closest\[0\]\.target"):
            structure_from_document(doc)

    def test_table_game_document(self):
        game, sigma = _pennies()
        m = build_nash_structure(game, sigma)
        parsed = structure_from_document(structure_to_document(m))
        assert validate_structure(parsed) == []
        assert parsed.game.table.shape == (2, 2, 2)
