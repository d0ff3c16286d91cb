"""
一致性（coherence）、半透明均衡判定，以及四种社会困境中两点混合组合的均衡条件。

一致性等价于：每个支撑策略的期望收益 u_i(s_i, sigma_{-i})
不低于 max_{s'} min_{s_{-i}} u_i(s', s_{-i})。
"""
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, prod

import numpy as np

from . import config
from .closed_form import cooperation_condition
from .counterfactual import (
    Violation,
    build_coherent_structure,
    build_typed_pd_structure,
    build_typed_structure,
    is_rational_at,
)
from .errors import GameError, TranslucencyError
from .games import (
    DilemmaKind,
    MixedProfile,
    SocialDilemma,
    cached_payoff_tensor,
    check_budget,
    check_params,
    expected_payoff,
    make_public_goods,
    replace,
)
from .numeric import to_fraction

logger = logging.getLogger(__name__)

__all__ = [
    "MixedProfile",
    "CoherenceReport",
    "TypedTEVerdict",
    "AdjudicationReport",
    "coherence_floors",
    "is_coherent",
    "support_states",
    "te_violations",
    "is_translucent_equilibrium",
    "te_condition",
    "te_condition_typed",
    "generalized_f",
    "typed_structure_verdict",
    "adjudicate_typed_pgg",
]


def _as_game(game):
    return game.game if isinstance(game, SocialDilemma) else game


@dataclass
class CoherenceReport:
    coherent: bool
    witness: tuple = None  # (玩家, 支撑策略, 偏离策略)

    def __bool__(self):
        return self.coherent


def _representative_others(dilemma, pool, n_others):
    """
    每个聚合值取一个代表组合（升序策略集 pool）。
    PGG 的收益只通过其他人贡献总和依赖对手，Bertrand 只通过最低价与报最低价的人数；
    其余情形退回多重集枚举。
    """
    if dilemma.kind is DilemmaKind.PGG:
        grid = len(pool) - 1
        for total in range(n_others * grid + 1):
            full, rest = divmod(total, grid)
            combo = [pool[-1]] * full
            if full < n_others:
                combo += [pool[rest]] + [pool[0]] * (n_others - full - 1)
            yield tuple(combo)
    elif dilemma.kind is DilemmaKind.BERTRAND:
        top = len(pool) - 1
        for k, low in enumerate(pool):
            for count in range(1, n_others + 1):
                if count < n_others and k == top:
                    continue
                yield (low,) * count + (pool[top],) * (n_others - count)
    else:
        yield from itertools.combinations_with_replacement(pool, n_others)


def _representative_count(dilemma, pool, n_others):
    if dilemma.kind is DilemmaKind.PGG:
        return n_others * (len(pool) - 1) + 1
    if dilemma.kind is DilemmaKind.BERTRAND:
        return (len(pool) - 1) * n_others + 1
    return comb(len(pool) + n_others - 1, n_others)


@lru_cache(maxsize=128)
def coherence_floors(game, i, budget=None):
    """
    floors[k] = min_{s_{-i}} u_i(S_i[k], s_{-i})，精确有理数。
    社会困境按收益所依赖的聚合量枚举代表组合，其余博弈用完整收益张量。
    """
    budget = config.ENUMERATION_BUDGET if budget is None else budget
    if isinstance(game, SocialDilemma) and game.symmetric:
        g = game.game
        others = [j for j in g.players if j != i]
        pool = sorted(g.strategy_sets[others[0]])
        count = _representative_count(game, pool, len(others)) * g.strategy_count(i)
        check_budget(f"玩家 {i} 的一致性下界", count, budget)
        floors = []
        for own in g.strategy_sets[i]:
            best = None
            for combo in _representative_others(game, pool, len(others)):
                profile = [None] * g.num_players
                profile[i] = own
                for j, s in zip(others, combo):
                    profile[j] = s
                value = g.payoff_rule(tuple(profile), i)
                if best is None or value < best:
                    best = value
            floors.append(best)
        return tuple(floors)

    g = _as_game(game)
    tensor = cached_payoff_tensor(g, budget)
    axes = tuple(j for j in g.players if j != i)
    return tuple(tensor[..., i].min(axis=axes))


def is_coherent(game, sigma, budget=None):
    """
    对每个玩家、每个支撑策略 s_i、每个偏离 s'，存在 s'_{-i} 使
    u_i(s_i, sigma_{-i}) >= u_i(s', s'_{-i})。返回第一个失败的 (玩家, 支撑策略, 偏离)。
    """
    g = _as_game(game)
    if sigma.num_players != g.num_players:
        raise GameError("混合策略个数与玩家数不一致")
    for i in g.players:
        check_budget(f"玩家 {i} 的期望收益", sigma.others_count(i) * len(sigma.support(i)), budget)
        floors = coherence_floors(game, i, budget)
        for s in sigma.support(i):
            value = expected_payoff(g, i, s, sigma)
            for k, floor in enumerate(floors):
                if floor > value:
                    return CoherenceReport(False, (i, s, g.strategy_sets[i][k]))
    return CoherenceReport(True)


def support_states(m, sigma):
    supports = [set(sigma.support(i)) for i in m.game.players]
    return [w for w, profile in enumerate(m.profiles) if all(s in supports[i] for i, s in enumerate(profile))]


def te_violations(m, sigma, omega_prime=None):
    """在 Omega' 的每个状态上检查 TE1-TE4，返回违例列表"""
    tol = config.TOLERANCE
    omega_prime = support_states(m, sigma) if omega_prime is None else list(omega_prime)
    inside = np.zeros(m.num_states, dtype=bool)
    inside[omega_prime] = True
    supports = [set(sigma.support(i)) for i in m.game.players]
    expected = [
        {others: float(p) for others, p in sigma.others(i)} for i in m.game.players
    ]

    violations = []
    for w in omega_prime:
        profile = m.profiles[w]
        for i, s in enumerate(profile):
            if s not in supports[i]:
                violations.append(Violation("TE1", w, i, f"策略 {s!r} 不在支撑集中"))
        for i in m.game.players:
            row = m.beliefs[i][w]
            outside = row[~inside].sum()
            if outside > tol:
                violations.append(Violation("TE2", w, i, f"Omega' 之外的信念概率 {outside:.6g}"))

            marginal = defaultdict(float)
            for t in np.flatnonzero(row):
                marginal[replace(m.profiles[t], i, None)] += row[t]
            for key in set(marginal) | set(expected[i]):
                if abs(marginal.get(key, 0.0) - expected[i].get(key, 0.0)) > tol:
                    violations.append(Violation("TE3", w, i, f"对其他人策略 {key} 的信念与 sigma_-i 不一致"))
                    break

            report = is_rational_at(m, i, w)
            if not report.rational:
                best = report.best_switch
                violations.append(Violation(
                    "TE4", w, i, f"EU={report.eu:.12g} < EU(切换到 {best!r})={report.eu_switch[best]:.12g}"
                ))
    return violations


def is_translucent_equilibrium(game, sigma, verify_structure=False, budget=None):
    """
    sigma 是半透明均衡当且仅当它一致。
    verify_structure=True 时额外构造见证结构并在 Omega' = supp(sigma) 上检查 TE1-TE4。
    """
    report = is_coherent(game, sigma, budget)
    if not verify_structure:
        return report.coherent
    g = _as_game(game)
    if g.profile_count() > config.STRUCTURE_STATE_BUDGET:
        logger.info("组合数 %d 超过结构预算，跳过见证结构检查", g.profile_count())
        return report.coherent
    m = build_coherent_structure(g, sigma, strict=False)
    violations = te_violations(m, sigma)
    if (not violations) != report.coherent:
        raise TranslucencyError(
            f"一致性判定 {report.coherent} 与见证结构 TE 检查不一致: {[str(v) for v in violations[:5]]}"
        )
    return report.coherent


# ---------------------------------------------------------------------------
# 两点混合组合的均衡条件
# ---------------------------------------------------------------------------

def _betas(kind, params, betas):
    n = 2 if kind in (DilemmaKind.PD, DilemmaKind.TD) else params["n"]
    betas = [to_fraction(b) for b in betas]
    if len(betas) != n:
        raise GameError(f"{kind.value} 需要 {n} 个 beta，收到 {len(betas)} 个")
    for i, b in enumerate(betas):
        if not 0 <= b <= 1:
            raise GameError(f"beta_{i} = {float(b)} 不在 [0,1] 内")
    return betas


def te_condition(kind, params, betas):
    """
    未区分类型的均衡条件：每个以正概率合作的玩家 i，
    其合作的期望收益不低于保底收益。全部 beta 为 0 时即纯纳什均衡。
    """
    kind = DilemmaKind(kind)
    p = check_params(kind, params, allow_limits=True)
    betas = _betas(kind, p, betas)
    if all(b == 0 for b in betas):
        return True
    for i, beta_i in enumerate(betas):
        if beta_i == 0:
            continue
        others = betas[:i] + betas[i + 1:]
        if kind is DilemmaKind.PD:
            ok = others[0] * p["b"] >= p["c"]
        elif kind is DilemmaKind.TD:
            ok = p["bonus"] * (1 - others[0]) <= (p["h"] - p["l"]) * others[0]
        elif kind is DilemmaKind.PGG:
            ok = p["rho"] * sum(others) >= 1 - p["rho"]
        else:
            ok = prod(others) >= Fraction(p["l"], p["h"])
        if not ok:
            return False
    return True


def generalized_f(gammas, n=None, budget=None):
    """
    sum_{J} prod_{j not in J} gamma_j prod_{j in J} (1 - gamma_j) / (|J| + 1)，
    J 取遍其他玩家的子集（J 中的人出最低价 L）。
    """
    gammas = list(gammas)
    n = len(gammas) + 1 if n is None else n
    if len(gammas) != n - 1:
        raise GameError(f"gammas 长度应为 {n - 1}，收到 {len(gammas)}")
    for g in gammas:
        if not 0 <= g <= 1:
            raise GameError(f"gamma = {float(g)} 不在 [0,1] 内")
    check_budget("generalized_f 子集枚举", 2 ** (n - 1), budget)
    total = 0
    for in_j in itertools.product((False, True), repeat=n - 1):
        weight = 1
        for g, member in zip(gammas, in_j):
            weight *= (1 - g) if member else g
        total += weight / (sum(in_j) + 1)
    return total


@dataclass
class TypedTEVerdict:
    corrected: bool
    printed: bool
    per_player: list = field(default_factory=list)

    @property
    def readings_agree(self):
        return self.corrected == self.printed


def _typed_player(kind, p, alpha_i, others):
    """返回 (corrected, printed) 两种写法下玩家 i 的合作条件"""
    if kind is DilemmaKind.PD:
        ok = alpha_i * others[0] * p["b"] >= p["c"]
        return ok, ok
    if kind is DilemmaKind.TD:
        params = {"l": p["l"], "h": p["h"], "bonus": p["bonus"]}
        corrected = cooperation_condition(kind, params, alpha_i, others[0], "corrected").rational
        printed = cooperation_condition(kind, params, alpha_i, others[0], "printed").rational
        return corrected, printed
    if kind is DilemmaKind.PGG:
        rho = p["rho"]
        total = sum(others, Fraction(0))
        corrected = alpha_i * rho * total >= 1 - rho
        printed = alpha_i * rho * total / len(others) >= 1 - rho
        return corrected, printed
    n, l, h = p["n"], p["l"], p["h"]
    gammas = [(1 - alpha_i) * b for b in others]
    f = generalized_f(gammas, n)
    lhs = prod(others)
    printed = lhs >= f * l * n / h
    best = f * l
    if h - l >= 2:
        best = max(best, prod(gammas) * (h - 1))
    corrected = lhs >= n * best / h
    return corrected, printed


def te_condition_typed(kind, params, alphas, betas):
    """
    区分类型的均衡条件。corrected 只对以正概率合作的玩家施加条件；
    printed 为原始写法（公共品博弈缺少 (N-1) 因子，且对所有玩家施加）。
    """
    kind = DilemmaKind(kind)
    p = check_params(kind, params, allow_limits=True)
    betas = _betas(kind, p, betas)
    alphas = [to_fraction(a) for a in alphas]
    if len(alphas) != len(betas):
        raise GameError("alphas 与 betas 长度不一致")
    for i, a in enumerate(alphas):
        if not 0 <= a <= 1:
            raise GameError(f"alpha_{i} = {float(a)} 不在 [0,1] 内")
    if all(b == 0 for b in betas):
        return TypedTEVerdict(True, True, [(True, True)] * len(betas))

    per_player = []
    for i, alpha_i in enumerate(alphas):
        others = betas[:i] + betas[i + 1:]
        per_player.append(_typed_player(kind, p, alpha_i, others))
    corrected = all(c for (c, _), b in zip(per_player, betas) if b > 0)
    printed = all(pr for _, pr in per_player)
    return TypedTEVerdict(corrected, printed, per_player)


def typed_structure_verdict(dilemma, alphas, betas):
    """
    结构层判定：在类型结构上取 Omega' = {(s, v): s 属于 supp(sigma)}，
    检查 TE1-TE4 是否全部成立。两人囚徒困境使用 16 状态结构，其余使用 N 人扩展结构。
    """
    sigma = MixedProfile.two_point(dilemma, betas)
    if dilemma.kind is DilemmaKind.PD:
        m = build_typed_pd_structure(alphas[0], alphas[1], betas[0], betas[1], dilemma.params["b"], dilemma.params["c"])
    else:
        m = build_typed_structure(dilemma, alphas, betas)
    return not te_violations(m, sigma)


@dataclass
class AdjudicationReport:
    points: int = 0
    excluded: int = 0
    corrected_matches: int = 0
    printed_matches: int = 0
    printed_mismatches: list = field(default_factory=list)
    corrected_mismatches: list = field(default_factory=list)

    @property
    def matching_readings(self):
        """在所有非边界点上都与结构层判定一致的写法"""
        readings = []
        if self.corrected_matches == self.points:
            readings.append("corrected")
        if self.printed_matches == self.points:
            readings.append("printed")
        return readings


def _pgg_on_boundary(rho, alphas, betas):
    for i, alpha_i in enumerate(alphas):
        total = sum(betas[:i] + betas[i + 1:], Fraction(0))
        if alpha_i * rho * total == 1 - rho:
            return True
        if alpha_i * rho * total / (len(betas) - 1) == 1 - rho:
            return True
    return False


def adjudicate_typed_pgg(n, rho, alpha_grid, beta_grid, grid=2):
    """
    在小规模公共品博弈上，用类型结构的 TE 检查裁决两种写法。
    所有玩家共用同一个 alpha，beta 取遍 beta_grid^n；等号成立的边界点不计入。
    """
    dilemma = make_public_goods(n, rho, grid)
    rho = dilemma.params["rho"]
    report = AdjudicationReport()
    for alpha in alpha_grid:
        alphas = [to_fraction(alpha)] * n
        for betas in itertools.product(beta_grid, repeat=n):
            betas = [to_fraction(b) for b in betas]
            if _pgg_on_boundary(rho, alphas, betas):
                report.excluded += 1
                continue
            verdict = te_condition_typed(DilemmaKind.PGG, dilemma.params, alphas, betas)
            oracle = typed_structure_verdict(dilemma, alphas, betas)
            report.points += 1
            point = (float(alphas[0]), tuple(float(b) for b in betas), oracle)
            if verdict.corrected == oracle:
                report.corrected_matches += 1
            else:
                report.corrected_mismatches.append(point)
            if verdict.printed == oracle:
                report.printed_matches += 1
            else:
                report.printed_mismatches.append(point)
    logger.info(
        "公共品类型条件裁决: %d 个点（排除边界 %d 个），corrected 一致 %d，printed 一致 %d",
        report.points, report.excluded, report.corrected_matches, report.printed_matches,
    )
    return report
