"""
类型 (alpha, beta, C) 的信念模型与合作理性的穷举判定引擎。

- on-path 信念：其他玩家各自独立以 beta 合作；
- 偏离后信念：每个其他玩家以 alpha 察觉偏离并改为背叛，
  对全部察觉子集 J 求混合，等价于每人以 (1 - alpha) * beta 合作的乘积分布。
"""
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np
from scipy.stats import binom

from . import config
from .errors import BeliefModelError, GameError
from .games import check_budget
from .numeric import to_fraction

logger = logging.getLogger(__name__)

ON_PATH = "on_path"
DEVIATION = "deviation"
METHODS = ("auto", "binomial", "enumerate")


@dataclass(frozen=True)
class TranslucentType:
    alpha: Fraction
    beta: Fraction

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = to_fraction(getattr(self, name))
            if not 0 <= value <= 1:
                raise GameError(f"{name} = {float(value)} 不在 [0,1] 内")
            object.__setattr__(self, name, value)

    @property
    def gamma(self):
        """偏离后每个其他玩家仍合作的概率"""
        return (1 - self.alpha) * self.beta


@dataclass(frozen=True)
class OthersBehaviorModel:
    """其他 N-1 个玩家的独立合作/背叛分布（乘积形式）"""
    cooperation_probs: tuple
    mode: str = ON_PATH

    def __post_init__(self):
        probs = tuple(to_fraction(p) for p in self.cooperation_probs)
        for p in probs:
            if not 0 <= p <= 1:
                raise BeliefModelError(f"合作概率 {float(p)} 不在 [0,1] 内")
        object.__setattr__(self, "cooperation_probs", probs)

    @property
    def num_others(self):
        return len(self.cooperation_probs)

    @property
    def homogeneous(self):
        return len(set(self.cooperation_probs)) <= 1

    def pattern_probability(self, pattern):
        """pattern[k] 为 True 表示第 k 个其他玩家合作"""
        prob = Fraction(1)
        for p, cooperates in zip(self.cooperation_probs, pattern):
            prob *= p if cooperates else 1 - p
        return prob

    def distribution(self):
        """{合作模式: 概率}，共 2^(N-1) 项"""
        return {
            pattern: self.pattern_probability(pattern)
            for pattern in itertools.product((False, True), repeat=self.num_others)
        }

    def count_distribution(self):
        """合作人数 k = 0..N-1 的二项分布（仅同质模型）"""
        if not self.homogeneous:
            raise BeliefModelError("非同质模型不能按合作人数聚合")
        m = self.num_others
        p = self.cooperation_probs[0] if m else Fraction(0)
        return [comb(m, k) * p**k * (1 - p) ** (m - k) for k in range(m + 1)]

    def weights(self, aggregate):
        """精确权重：aggregate 时按合作人数 0..N-1，否则按 distribution() 的模式顺序"""
        if aggregate:
            return self.count_distribution()
        return list(self.distribution().values())

    def float_weights(self, aggregate):
        m = self.num_others
        if aggregate:
            if not self.homogeneous:
                raise BeliefModelError("非同质模型不能按合作人数聚合")
            p = float(self.cooperation_probs[0]) if m else 0.0
            return binom.pmf(np.arange(m + 1), m, p)
        probs = np.array([float(p) for p in self.cooperation_probs])
        patterns = np.array(list(itertools.product((0, 1), repeat=m)), dtype=bool).reshape(-1, m)
        return np.prod(np.where(patterns, probs, 1.0 - probs), axis=1)


def on_path_beliefs(t, n):
    if n < 2:
        raise GameError(f"玩家数必须 >= 2，当前为 {n}")
    return OthersBehaviorModel((t.beta,) * (n - 1), ON_PATH)


def subset_mixture(t, n):
    """
    显式枚举察觉子集 J：J 中的人背叛，J 之外的人以 beta 合作，
    权重 alpha^|J| (1-alpha)^(N-1-|J|)。返回 {合作模式: 概率}。
    """
    others = n - 1
    alpha, beta = t.alpha, t.beta
    mixture = {}
    for detected in itertools.product((False, True), repeat=others):
        size = sum(detected)
        weight = alpha**size * (1 - alpha) ** (others - size)
        if weight == 0:
            continue
        free = [k for k in range(others) if not detected[k]]
        for bits in itertools.product((False, True), repeat=len(free)):
            coop = sum(bits)
            prob = weight * beta**coop * (1 - beta) ** (len(free) - coop)
            if prob == 0:
                continue
            pattern = [False] * others
            for k, bit in zip(free, bits):
                pattern[k] = bit
            key = tuple(pattern)
            mixture[key] = mixture.get(key, Fraction(0)) + prob
    return mixture


def deviation_belief_mixture(t, n, max_players=None, verify=True):
    """
    偏离后信念。verify 且人数不超过 max_players 时先做子集枚举，
    逐个模式核对与乘积形式完全相等（有理数运算），再返回乘积模型。
    判定引擎在网格上逐点调用，传 verify=False 只取乘积模型。
    """
    if n < 2:
        raise GameError(f"玩家数必须 >= 2，当前为 {n}")
    max_players = config.SUBSET_ENUMERATION_MAX_PLAYERS if max_players is None else max_players
    model = OthersBehaviorModel((t.gamma,) * (n - 1), DEVIATION)
    if not verify:
        return model
    if n > max_players:
        logger.warning("n=%d 超过子集枚举上限 %d，直接使用乘积形式", n, max_players)
        return model

    mixture = subset_mixture(t, n)
    for pattern, expected in model.distribution().items():
        got = mixture.get(pattern, Fraction(0))
        if got != expected:
            raise BeliefModelError(
                f"子集混合与乘积形式不一致: 模式 {pattern} 混合概率 {got}，乘积概率 {expected}"
            )
    return model


# ---------------------------------------------------------------------------
# 期望效用
# ---------------------------------------------------------------------------

def _resolve_method(dilemma, method):
    if method not in METHODS:
        raise ValueError(f"未知的计算方式 {method!r}，可选 {METHODS}")
    if method == "auto":
        return "binomial" if dilemma.symmetric else "enumerate"
    if method == "binomial" and not dilemma.symmetric:
        raise GameError("非对称博弈不能按合作人数聚合")
    return method


def _outcomes(dilemma, i, method):
    """
    其他玩家的合作结果：binomial 为合作人数 k（由前 k 个其他玩家合作代表），
    enumerate 为全部 {C,D}^(N-1) 模式。
    """
    others = [j for j in dilemma.game.players if j != i]
    if method == "binomial":
        return [frozenset(others[:k]) for k in range(len(others) + 1)]
    return [
        frozenset(j for j, bit in zip(others, pattern) if bit)
        for pattern in itertools.product((False, True), repeat=len(others))
    ]


def _row(dilemma, i, own, outcomes):
    rule = dilemma.game.payoff_rule
    return [rule(dilemma.profile_with(i, own, cooperators), i) for cooperators in outcomes]


def _check_player(dilemma, i):
    if not 0 <= i < dilemma.num_players:
        raise GameError(f"玩家下标 {i} 超出范围 [0, {dilemma.num_players - 1}]")


def _expected(dilemma, i, own, model, method):
    method = _resolve_method(dilemma, method)
    _check_player(dilemma, i)
    outcomes = _outcomes(dilemma, i, method)
    weights = model.weights(method == "binomial")
    return sum((w * u for w, u in zip(weights, _row(dilemma, i, own, outcomes))), Fraction(0))


def expected_utility_cooperate(dilemma, i, t, method="auto"):
    """on-path 信念下合作的期望效用（精确有理数）"""
    model = on_path_beliefs(t, dilemma.num_players)
    return _expected(dilemma, i, dilemma.cooperate(i), model, method)


def expected_utility_deviation(dilemma, i, t, s_dev, method="auto"):
    """偏离到 s_dev 时、在偏离后信念下的期望效用（精确有理数）"""
    s_dev = dilemma.game.coerce_strategy(i, s_dev)
    model = deviation_belief_mixture(t, dilemma.num_players, verify=False)
    return _expected(dilemma, i, s_dev, model, method)


@dataclass
class RationalityReport:
    verdict: bool
    best_deviation: object
    eu_coop: float
    eu_best_dev: float
    exact_recheck: bool = False

    @property
    def margin(self):
        return self.eu_coop - self.eu_best_dev


@lru_cache(maxsize=256)
def _deviation_basis(dilemma, i, method, budget):
    """
    玩家 i 每个策略在每种结果下的收益矩阵（精确 + 浮点两份）。
    按 (博弈, 玩家, 方式, 预算) 缓存，扫描时同一博弈只算一次。
    """
    strategies = dilemma.game.strategy_sets[i]
    outcomes = _outcomes(dilemma, i, method)
    check_budget(f"{dilemma.game.name} 玩家 {i} 的偏离枚举", len(strategies) * len(outcomes), budget)
    exact = np.array([_row(dilemma, i, s, outcomes) for s in strategies], dtype=object).reshape(
        len(strategies), len(outcomes)
    )
    return strategies, exact, exact.astype(float)


def _cooperation_test(dilemma, i, on_path, deviation, method, budget):
    """on_path / deviation 为其他玩家的 OthersBehaviorModel"""
    _check_player(dilemma, i)
    method = _resolve_method(dilemma, method)
    aggregate = method == "binomial"
    budget = config.ENUMERATION_BUDGET if budget is None else budget
    strategies, exact, approx = _deviation_basis(dilemma, i, method, budget)
    coop_row = dilemma.game.index_of(i, dilemma.cooperate(i))

    eu_coop = float(approx[coop_row] @ on_path.float_weights(aggregate))
    eu_dev = approx @ deviation.float_weights(aggregate)
    # 偏离集合不含合作策略本身
    eu_dev[coop_row] = -np.inf
    best = int(np.argmax(eu_dev))
    margin = eu_coop - eu_dev[best]
    if abs(margin) > config.TOLERANCE:
        return RationalityReport(bool(margin > 0), strategies[best], eu_coop, float(eu_dev[best]))

    # 差距落在容差内：对合作与所有接近最大值的偏离精确重算
    w_on, w_dev = on_path.weights(aggregate), deviation.weights(aggregate)
    coop_exact = sum((w * u for w, u in zip(w_on, exact[coop_row])), Fraction(0))
    candidates = np.flatnonzero(eu_dev >= eu_dev[best] - 2 * config.TOLERANCE)
    best_row, best_exact = None, None
    for row in candidates:
        value = sum((w * u for w, u in zip(w_dev, exact[row])), Fraction(0))
        if best_exact is None or value > best_exact:
            best_row, best_exact = int(row), value
    return RationalityReport(
        coop_exact >= best_exact, strategies[best_row], float(coop_exact), float(best_exact), exact_recheck=True
    )


def is_cooperation_rational(dilemma, i, t, method="auto", budget=None):
    """
    合作对类型 t 是否为半透明理性：合作的期望效用不低于
    偏离到任一其他策略后的期望效用（弱不等式）。
    """
    n = dilemma.num_players
    return _cooperation_test(
        dilemma, i, on_path_beliefs(t, n), deviation_belief_mixture(t, n, verify=False), method, budget
    )


def standard_best_response(dilemma, i, beta, method="auto", budget=None):
    """标准最优反应：偏离时信念不变"""
    beta = to_fraction(beta)
    if not 0 <= beta <= 1:
        raise GameError(f"beta = {float(beta)} 不在 [0,1] 内")
    beliefs = on_path_beliefs(TranslucentType(0, beta), dilemma.num_players)
    return _cooperation_test(dilemma, i, beliefs, beliefs, method, budget)
