"""
对照模型：Fehr-Schmidt 不平等厌恶、Charness-Rabin 社会偏好、logit QRE。
全部作为 games 模块收益之上的效用变换，不另行定义博弈。
"""
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import softmax

from . import config
from .beliefs import RationalityReport
from .errors import GameError, QRENonConvergenceError
from .games import MixedProfile, SocialDilemma, check_budget, payoff_tensor, payoffs
from .numeric import to_fraction

logger = logging.getLogger(__name__)


def _as_game(game):
    return game.game if isinstance(game, SocialDilemma) else game


def _weights(name, values):
    values = tuple(to_fraction(v) for v in values)
    for k, v in enumerate(values):
        if not 0 <= v <= 1:
            raise GameError(f"{name}[{k}] = {float(v)} 不在 [0,1] 内")
    return values


@dataclass(frozen=True)
class FehrSchmidtParams:
    a_fs: tuple  # 嫉妒权重
    b_fs: tuple  # 内疚权重

    def __post_init__(self):
        a = tuple(to_fraction(v) for v in self.a_fs)
        b = tuple(to_fraction(v) for v in self.b_fs)
        if len(a) != len(b):
            raise GameError("a_fs 与 b_fs 长度不一致")
        for i, (a_i, b_i) in enumerate(zip(a, b)):
            if not 0 <= b_i <= a_i:
                raise GameError(f"玩家 {i} 需满足 0 <= b_fs <= a_fs，收到 a={float(a_i)}, b={float(b_i)}")
        object.__setattr__(self, "a_fs", a)
        object.__setattr__(self, "b_fs", b)

    @classmethod
    def uniform(cls, n, a_fs, b_fs):
        return cls((a_fs,) * n, (b_fs,) * n)


@dataclass(frozen=True)
class CharnessRabinParams:
    a_cr: tuple  # 社会福利权重
    d_cr: tuple  # 其中最低收益所占权重

    def __post_init__(self):
        a = _weights("a_cr", self.a_cr)
        d = _weights("d_cr", self.d_cr)
        if len(a) != len(d):
            raise GameError("a_cr 与 d_cr 长度不一致")
        object.__setattr__(self, "a_cr", a)
        object.__setattr__(self, "d_cr", d)

    @classmethod
    def uniform(cls, n, a_cr, d_cr):
        return cls((a_cr,) * n, (d_cr,) * n)


def _check_players(game, p, field_name):
    if len(getattr(p, field_name)) != game.num_players:
        raise GameError(f"{field_name} 长度与玩家数 {game.num_players} 不一致")


def fehr_schmidt_utility(game, profile, i, p):
    """U_i = u_i - a_i/(N-1) sum max(u_j - u_i, 0) - b_i/(N-1) sum max(u_i - u_j, 0)"""
    game = _as_game(game)
    _check_players(game, p, "a_fs")
    u = payoffs(game, profile)
    n = game.num_players
    envy = sum((max(u[j] - u[i], 0) for j in range(n) if j != i), Fraction(0))
    guilt = sum((max(u[i] - u[j], 0) for j in range(n) if j != i), Fraction(0))
    return u[i] - p.a_fs[i] * envy / (n - 1) - p.b_fs[i] * guilt / (n - 1)


def fs_pgg_full_contribution_condition(b_fs_i, rho, reading="corrected"):
    """
    Fehr-Schmidt 玩家在公共品博弈中维持全额贡献的条件。
    向下偏离 x -> x' 的物质收益为 (1-rho)(x-x')，内疚惩罚为 b (x-x')，
    故 corrected 为 b >= 1 - rho；printed 写法为 b >= (1 - rho) / rho（充分不必要）。
    """
    b, rho = to_fraction(b_fs_i), to_fraction(rho)
    if not 0 < rho <= 1:
        raise GameError(f"rho = {float(rho)} 不在 (0,1] 内")
    if reading == "corrected":
        return b >= 1 - rho
    if reading == "printed":
        return b >= (1 - rho) / rho
    raise ValueError(f"未知的 reading {reading!r}")


def charness_rabin_utility(game, profile, i, p):
    """U_i = (1-a_i) u_i + a_i (d_i min_j u_j + (1-d_i) sum_j u_j)"""
    game = _as_game(game)
    _check_players(game, p, "a_cr")
    u = payoffs(game, profile)
    a, d = p.a_cr[i], p.d_cr[i]
    return (1 - a) * u[i] + a * (d * min(u) + (1 - d) * sum(u, Fraction(0)))


def charness_rabin_cooperation(dilemma, i, p, beta, budget=None):
    """
    Charness-Rabin 效用下，其他人各自以 beta 合作时，合作是否为（标准）最优反应。
    """
    _check_players(dilemma.game, p, "a_cr")
    beta = to_fraction(beta)
    if not 0 <= beta <= 1:
        raise GameError(f"beta = {float(beta)} 不在 [0,1] 内")
    others = [j for j in dilemma.game.players if j != i]
    patterns = list(itertools.product((False, True), repeat=len(others)))
    strategies = dilemma.game.strategy_sets[i]
    check_budget("Charness-Rabin 最优反应", len(strategies) * len(patterns), budget)

    weights = []
    for pattern in patterns:
        w = Fraction(1)
        for bit in pattern:
            w *= beta if bit else 1 - beta
        weights.append(w)

    def expected(own):
        total = Fraction(0)
        for pattern, w in zip(patterns, weights):
            if w == 0:
                continue
            cooperators = {j for j, bit in zip(others, pattern) if bit}
            total += w * charness_rabin_utility(dilemma.game, dilemma.profile_with(i, own, cooperators), i, p)
        return total

    coop = dilemma.cooperate(i)
    eu_coop = expected(coop)
    best, best_value = None, None
    for s in strategies:
        if s == coop:
            continue
        value = expected(s)
        if best_value is None or value > best_value:
            best, best_value = s, value
    return RationalityReport(eu_coop >= best_value, best, float(eu_coop), float(best_value), exact_recheck=True)


# ---------------------------------------------------------------------------
# logit QRE
# ---------------------------------------------------------------------------

@dataclass
class QREResult:
    probabilities: list
    residual: float
    iterations: int
    max_normalization_error: float
    strategy_sets: tuple

    def cooperation_probability(self, i, strategy):
        k = list(self.strategy_sets[i]).index(strategy)
        return float(self.probabilities[i][k])

    def profile(self, game):
        mappings = [
            {s: float(prob) for s, prob in zip(strategies, probs) if prob > 0}
            for strategies, probs in zip(self.strategy_sets, self.probabilities)
        ]
        return MixedProfile.from_mappings(_as_game(game), mappings)


def _expected_utilities(tensor, sigma, i):
    """EU_i(s_i, sigma_{-i})：从高维到低维依次与其他玩家的分布收缩"""
    u = tensor[..., i]
    for j in reversed(range(len(sigma))):
        if j != i:
            u = np.tensordot(u, sigma[j], axes=([j], [0]))
    return u


def logit_qre(game, lam, damping=None, max_iterations=None, residual_tol=None):
    """
    阻尼不动点迭代 sigma <- (1-d) sigma + d softmax(lambda EU)，从均匀分布出发，
    残差 max|softmax(lambda EU) - sigma| 不超过 residual_tol 时停止；超出迭代上限抛 QRENonConvergenceError。
    """
    game = _as_game(game)
    lam = float(lam)
    if lam < 0:
        raise GameError(f"lambda 必须 >= 0，收到 {lam}")
    damping = config.QRE_DAMPING if damping is None else damping
    max_iterations = config.QRE_MAX_ITERATIONS if max_iterations is None else max_iterations
    residual_tol = config.QRE_RESIDUAL if residual_tol is None else residual_tol
    for i in game.players:
        if game.strategy_count(i) > config.QRE_MAX_STRATEGIES:
            raise GameError(
                f"玩家 {i} 有 {game.strategy_count(i)} 个策略，超过 QRE 上限 {config.QRE_MAX_STRATEGIES}"
            )

    tensor = payoff_tensor(game).astype(float)
    sigma = [np.full(game.strategy_count(i), 1.0 / game.strategy_count(i)) for i in game.players]
    norm_error = max(abs(s.sum() - 1.0) for s in sigma)
    residual = np.inf
    for iteration in range(1, max_iterations + 1):
        responses = [softmax(lam * _expected_utilities(tensor, sigma, i)) for i in game.players]
        residual = max(float(np.max(np.abs(r - s))) for r, s in zip(responses, sigma))
        if residual <= residual_tol:
            sigma = responses
            norm_error = max(norm_error, max(abs(s.sum() - 1.0) for s in sigma))
            logger.debug("QRE lambda=%g 收敛: %d 次迭代，残差 %.3e", lam, iteration, residual)
            return QREResult(sigma, residual, iteration, float(norm_error), game.strategy_sets)
        sigma = [(1 - damping) * s + damping * r for s, r in zip(sigma, responses)]
        norm_error = max(norm_error, max(abs(s.sum() - 1.0) for s in sigma))
    raise QRENonConvergenceError(residual, max_iterations)
