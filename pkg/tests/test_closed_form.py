import itertools
from fractions import Fraction

import numpy as np
import pytest

from src.beliefs import TranslucentType, is_cooperation_rational
from src.closed_form import (
    bertrand_lower_bound_check,
    bertrand_threshold,
    cooperation_condition,
    f_gamma,
    f_gamma_sum,
    travelers_bound,
)
from src.errors import GameError
from src.games import make_bertrand, make_travelers_dilemma


class TestFGamma:
    @pytest.mark.parametrize("n", [2, 3, 7, 64])
    def test_endpoints(self, n):
        assert f_gamma(0, n) == Fraction(1, n)
        assert f_gamma(1, n) == 1

    def test_two_players(self):
        assert f_gamma(Fraction(45, 100), 2) == Fraction(29, 40)
        assert f_gamma_sum(Fraction(45, 100), 2) == Fraction(29, 40)

    @pytest.mark.parametrize("n", [2, 3, 5, 16, 64])
    def test_analytic_identity(self, n):
        for gamma in np.arange(0, 100) / 100:
            gamma = float(gamma)
            analytic = (1 - gamma**n) / (n * (1 - gamma))
            assert f_gamma_sum(gamma, n) == pytest.approx(analytic, abs=1e-12)

    def test_exact_paths_agree(self):
        for gamma in (Fraction(1, 3), Fraction(9, 10), Fraction(999999, 1000000)):
            for n in (2, 4, 9):
                assert f_gamma(gamma, n) == f_gamma_sum(gamma, n)

    @pytest.mark.parametrize("n", [2, 4, 10, 64])
    def test_lower_bound(self, n):
        for gamma in np.linspace(0, 1, 51):
            assert f_gamma(float(gamma), n) >= 1 / n - 1e-12

    def test_rejects_bad_gamma(self):
        with pytest.raises(GameError, match="gamma"):
            f_gamma(1.5, 2)


class TestCooperationCondition:
    def test_pd_boundary(self):
        v = cooperation_condition("pd", {"b": 4, "c": 1}, 0.5, 0.5)
        assert v.rational
        assert v.binding_quantity == 1
        assert v.threshold == 1

    def test_pgg_full_return_limit(self):
        for alpha, beta in itertools.product([0, 0.3, 1], repeat=2):
            assert cooperation_condition("pgg", {"n": 3, "rho": 1}, alpha, beta).rational

    def test_pgg_values(self):
        v = cooperation_condition("pgg", {"n": 4, "rho": 0.5}, 0.4, 0.9)
        assert v.binding_quantity == Fraction(27, 50)
        assert v.threshold == Fraction(1, 2)
        assert v.rational

    @pytest.mark.parametrize("reading", ["corrected", "printed"])
    def test_bertrand_example(self, reading):
        v = cooperation_condition("bertrand", {"n": 2, "l": 2, "h": 100}, 0.5, 0.9, reading)
        assert v.rational
        assert v.binding_quantity == Fraction(9, 10)

    def test_bertrand_printed_threshold(self):
        assert bertrand_threshold(2, 2, 100, Fraction(1, 2), Fraction(9, 10), "printed") == Fraction(29, 1000)

    def test_td_full_transparency(self):
        v = cooperation_condition("td", {"l": 2, "h": 10, "bonus": 100}, 1, 1)
        assert v.binding_quantity == float("inf")
        assert v.rational

    def test_td_half_alpha_uses_floor_bound_only(self):
        assert travelers_bound(2, 100, Fraction(1, 2), Fraction(1, 2)) == Fraction(196, 3)

    def test_rejects_bad_type(self):
        with pytest.raises(GameError, match="beta"):
            cooperation_condition("pd", {"b": 4, "c": 1}, 0.5, 2)

    def test_rejects_unknown_reading(self):
        with pytest.raises(ValueError, match="reading"):
            cooperation_condition("pd", {"b": 4, "c": 1}, 0.5, 0.5, "literal")


class TestBertrandLowerBound:
    def test_irrational_for_every_alpha(self):
        assert bertrand_lower_bound_check(0.5, 2, 100, 8)
        d = make_bertrand(8, 2, 100)
        for alpha in (0, 0.25, 0.5, 0.75, 1):
            assert not is_cooperation_rational(d, 0, TranslucentType(alpha, 0.5)).verdict
            assert not cooperation_condition("bertrand", {"n": 8, "l": 2, "h": 100}, alpha, 0.5).rational

    @pytest.mark.parametrize("beta,n", [(1, 2), (1, 5), (0.9, 2)])
    def test_not_triggered(self, beta, n):
        assert not bertrand_lower_bound_check(beta, 2, 100, n)


class TestPrintedReadings:
    """printed 写法与穷举引擎不一致的点"""

    def test_td_small_alpha(self):
        params = {"l": 2, "h": 10, "bonus": 6}
        printed = cooperation_condition("td", params, 0.25, 1, "printed")
        corrected = cooperation_condition("td", params, 0.25, 1)
        engine = is_cooperation_rational(make_travelers_dilemma(2, 10, 6), 0, TranslucentType(0.25, 1))
        assert printed.rational
        assert not corrected.rational
        assert not engine.verdict
        assert engine.best_deviation == 9

    def test_bertrand_small_alpha(self):
        params = {"n": 2, "l": 2, "h": 30}
        printed = cooperation_condition("bertrand", params, 0.3, 1, "printed")
        corrected = cooperation_condition("bertrand", params, 0.3, 1)
        engine = is_cooperation_rational(make_bertrand(2, 2, 30), 0, TranslucentType(0.3, 1))
        assert printed.rational
        assert not corrected.rational
        assert not engine.verdict
        assert engine.best_deviation == 29

    def test_bertrand_not_monotone_in_n_for_small_alpha(self):
        """alpha 较小时 N 增大反而让合作变得理性"""
        two = cooperation_condition("bertrand", {"n": 2, "l": 2, "h": 30}, 0.3, 1)
        six = cooperation_condition("bertrand", {"n": 6, "l": 2, "h": 30}, 0.3, 1)
        assert not two.rational
        assert six.rational
        assert is_cooperation_rational(make_bertrand(6, 2, 30), 0, TranslucentType(0.3, 1)).verdict

    def test_readings_coincide_for_large_alpha(self):
        grid = [Fraction(k, 10) for k in range(5, 11)]
        betas = [Fraction(k, 10) for k in range(11)]
        for n, l, h in ((2, 2, 30), (3, 2, 12), (5, 3, 20)):
            params = {"n": n, "l": l, "h": h}
            for alpha, beta in itertools.product(grid, betas):
                assert (
                    cooperation_condition("bertrand", params, alpha, beta).rational
                    == cooperation_condition("bertrand", params, alpha, beta, "printed").rational
                )
