import math
from fractions import Fraction

import pytest

from src.alt_models import (
    CharnessRabinParams,
    FehrSchmidtParams,
    charness_rabin_cooperation,
    charness_rabin_utility,
    fehr_schmidt_utility,
    fs_pgg_full_contribution_condition,
    logit_qre,
)
from src.errors import GameError, QRENonConvergenceError
from src.games import make_bertrand, make_prisoners_dilemma, make_public_goods, payoff


class TestFehrSchmidt:
    def test_equal_payoffs_unchanged(self, pd):
        p = FehrSchmidtParams.uniform(2, 0.5, 0.5)
        assert fehr_schmidt_utility(pd, ("C", "C"), 0, p) == 3

    def test_envy(self, pd):
        p = FehrSchmidtParams.uniform(2, 0.5, 0.25)
        assert fehr_schmidt_utility(pd, ("C", "D"), 0, p) == Fraction(-7, 2)
        assert fehr_schmidt_utility(pd, ("C", "D"), 1, p) == Fraction(11, 4)

    def test_guilt_must_not_exceed_envy(self):
        with pytest.raises(GameError, match="b_fs <= a_fs"):
            FehrSchmidtParams.uniform(2, 0.3, 0.5)

    def test_player_count_checked(self, pd):
        with pytest.raises(GameError, match="长度"):
            fehr_schmidt_utility(pd, ("C", "C"), 0, FehrSchmidtParams.uniform(3, 0.5, 0.5))

    @pytest.mark.parametrize(
        "b,rho,corrected,printed",
        [(1, 0.5, True, True), (0, 1, True, True), (0.5, 0.6, True, False), (0.3, 0.6, False, False)],
    )
    def test_full_contribution_condition(self, b, rho, corrected, printed):
        assert fs_pgg_full_contribution_condition(b, rho) is corrected
        assert fs_pgg_full_contribution_condition(b, rho, "printed") is printed

    @pytest.mark.parametrize("b_fs,expected", [(0.5, True), (0.3, False)])
    def test_full_contribution_by_enumeration(self, b_fs, expected):
        d = make_public_goods(2, 0.6, grid=4)
        p = FehrSchmidtParams.uniform(2, 0.5, b_fs)
        one = Fraction(1)
        stay = fehr_schmidt_utility(d, (one, one), 0, p)
        deviations = [fehr_schmidt_utility(d, (x, one), 0, p) for x in d.game.strategy_sets[0] if x != one]
        assert (stay >= max(deviations)) is expected
        assert fs_pgg_full_contribution_condition(b_fs, 0.6) is expected


class TestCharnessRabin:
    def test_selfish_weight(self, pd):
        p = CharnessRabinParams.uniform(2, 0, 0.7)
        for profile in (("C", "C"), ("C", "D"), ("D", "D")):
            assert charness_rabin_utility(pd, profile, 0, p) == payoff(pd.game, profile, 0)

    def test_maximin(self, pd):
        p = CharnessRabinParams.uniform(2, 1, 1)
        assert charness_rabin_utility(pd, ("C", "D"), 1, p) == -1

    def test_mixed_weights(self, pd):
        p = CharnessRabinParams.uniform(2, 0.5, 0.5)
        assert charness_rabin_utility(pd, ("C", "C"), 0, p) == Fraction(15, 4)

    def test_cooperation(self, pd):
        assert not charness_rabin_cooperation(pd, 0, CharnessRabinParams.uniform(2, 0, 0), 0.5).verdict
        assert charness_rabin_cooperation(pd, 0, CharnessRabinParams.uniform(2, 1, 0), 0.5).verdict

    def test_weights_bounded(self):
        with pytest.raises(GameError, match="d_cr"):
            CharnessRabinParams.uniform(2, 0.5, 1.5)


class TestLogitQRE:
    def test_zero_lambda_is_uniform(self, pd):
        result = logit_qre(pd, 0)
        assert result.cooperation_probability(0, "C") == 0.5
        assert result.iterations == 1

    @pytest.mark.parametrize("lam", [0.5, 1, 3])
    def test_pd_closed_form(self, pd, lam):
        result = logit_qre(pd, lam)
        expected = 1 / (1 + math.exp(lam))
        for i in range(2):
            assert result.cooperation_probability(i, "C") == pytest.approx(expected, abs=1e-8)
        assert result.max_normalization_error <= 1e-12

    def test_cooperation_decreases_in_lambda(self, pd):
        probs = [logit_qre(pd, lam).cooperation_probability(0, "C") for lam in (0, 0.5, 1, 2, 4)]
        assert probs == sorted(probs, reverse=True)
        assert all(p < 0.5 for p in probs[1:])

    @pytest.mark.slow
    @pytest.mark.parametrize("b,c", [(1.5, 0.5), (2, 1), (4, 1), (4, 3.5), (10, 0.5), (10, 9.5)])
    def test_pd_cooperation_never_exceeds_half(self, b, c):
        d = make_prisoners_dilemma(b, c)
        for lam in (k / 2 for k in range(101)):
            result = logit_qre(d, lam)
            assert result.residual <= 1e-10
            expected = 1 / (1 + math.exp(lam * c))
            for i in range(2):
                p = result.cooperation_probability(i, "C")
                assert p == pytest.approx(expected, abs=1e-8)
                if lam == 0:
                    assert p == 0.5
                else:
                    assert p < 0.5

    def test_profile_is_mixed_profile(self, pd):
        sigma = logit_qre(pd, 1).profile(pd)
        assert sigma.support(0) == ("C", "D")

    def test_non_convergence(self, pd):
        with pytest.raises(QRENonConvergenceError) as info:
            logit_qre(pd, 1, max_iterations=1)
        assert info.value.iterations == 1

    def test_strategy_limit(self):
        with pytest.raises(GameError, match="QRE 上限"):
            logit_qre(make_bertrand(2, 2, 300), 1)

    def test_negative_lambda(self, pd):
        with pytest.raises(GameError, match="lambda"):
            logit_qre(pd, -1)
