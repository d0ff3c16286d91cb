"""
有限反事实结构 (Omega, s, f, PR_1..PR_N)。

状态、策略都用稠密整数下标；closest[i] 是形状 (|Omega|, |S_i|) 的目标状态表，
beliefs[i] 是形状 (|Omega|, |Omega|) 的信念矩阵，每行是一个概率分布。
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import config
from .errors import BudgetExceededError, IncoherentProfileError, NotNashError, StructureError
from .games import (
    MixedProfile,
    NormalFormGame,
    SocialDilemma,
    cached_payoff_tensor,
    check_budget,
    dilemma_from_document,
    encode_value,
    expected_payoff,
    game_to_document,
    make_prisoners_dilemma,
    replace,
)

logger = logging.getLogger(__name__)

AXIOMS = ("CS1", "CS2", "PR1", "PR2", "NORM")


def _as_game(game):
    return game.game if isinstance(game, SocialDilemma) else game


@dataclass(frozen=True, eq=False)
class CounterfactualStructure:
    game: NormalFormGame
    profiles: tuple
    closest: tuple
    beliefs: tuple
    aux: tuple = None
    name: str = "structure"
    strat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        game = _as_game(self.game)
        object.__setattr__(self, "game", game)
        n_states = len(self.profiles)
        if n_states == 0:
            raise StructureError("状态集为空")
        check_budget("反事实结构状态数", n_states, config.STRUCTURE_STATE_BUDGET)

        profiles = tuple(game.normalize_profile(p) for p in self.profiles)
        aux = tuple(tuple(a) for a in self.aux) if self.aux is not None else ((),) * n_states
        if len(aux) != n_states:
            raise StructureError(f"aux 长度 {len(aux)} 与状态数 {n_states} 不一致")
        if len(self.closest) != game.num_players or len(self.beliefs) != game.num_players:
            raise StructureError("closest / beliefs 的玩家数与博弈不一致")

        closest, beliefs = [], []
        for i in game.players:
            table = np.asarray(self.closest[i], dtype=np.int64)
            expected = (n_states, game.strategy_count(i))
            if table.shape != expected:
                raise StructureError(f"玩家 {i} 的 closest 表形状 {table.shape}，应为 {expected}")
            if table.size and (table.min() < 0 or table.max() >= n_states):
                raise StructureError(f"玩家 {i} 的 closest 表指向不存在的状态")
            table.setflags(write=False)
            closest.append(table)

            matrix = np.asarray(self.beliefs[i], dtype=float)
            if matrix.shape != (n_states, n_states):
                raise StructureError(f"玩家 {i} 的信念矩阵形状 {matrix.shape}，应为 {(n_states, n_states)}")
            if not np.all(np.isfinite(matrix)):
                raise StructureError(f"玩家 {i} 的信念矩阵含非有限数值")
            matrix.setflags(write=False)
            beliefs.append(matrix)

        strat = np.array(
            [[game.index_of(i, s) for i, s in enumerate(p)] for p in profiles], dtype=np.int64
        ).reshape(n_states, game.num_players)
        strat.setflags(write=False)
        object.__setattr__(self, "profiles", profiles)
        object.__setattr__(self, "aux", aux)
        object.__setattr__(self, "closest", tuple(closest))
        object.__setattr__(self, "beliefs", tuple(beliefs))
        object.__setattr__(self, "strat", strat)
        object.__setattr__(self, "_utilities", {})

    @property
    def num_states(self):
        return len(self.profiles)

    @property
    def num_players(self):
        return self.game.num_players

    @cached_property
    def state_lookup(self):
        return {(p, a): k for k, (p, a) in enumerate(zip(self.profiles, self.aux))}

    def state_index(self, profile, aux=()):
        key = (self.game.normalize_profile(profile), tuple(aux))
        try:
            return self.state_lookup[key]
        except KeyError:
            raise StructureError(f"状态 {key} 不在结构中") from None

    def switch_utilities(self, i):
        """U[w, k] = u_i(S_i[k], s_{-i}(w))，按玩家缓存"""
        if i not in self._utilities:
            strategies = self.game.strategy_sets[i]
            check_budget(f"玩家 {i} 的状态收益表", self.num_states * len(strategies))
            rule = self.game.payoff_rule
            table = np.array(
                [[float(rule(replace(p, i, s), i)) for s in strategies] for p in self.profiles], dtype=float
            ).reshape(self.num_states, len(strategies))
            table.setflags(write=False)
            self._utilities[i] = table
        return self._utilities[i]


@dataclass(frozen=True)
class Violation:
    axiom: str
    state: int
    player: int
    detail: str = ""

    def __str__(self):
        return f"{self.axiom} state={self.state} player={self.player} {self.detail}".rstrip()


def validate_structure(m):
    """返回全部公理违例；空列表表示 CS1、CS2、PR1、PR2 与归一化都成立"""
    tol = config.NORMALIZATION_TOLERANCE
    violations = []
    states = np.arange(m.num_states)
    for i in m.game.players:
        closest, beliefs = m.closest[i], m.beliefs[i]
        own = m.strat[:, i]
        strategies = np.arange(m.game.strategy_count(i))

        landed = m.strat[closest, i]
        for w, k in np.argwhere(landed != strategies[None, :]):
            violations.append(Violation(
                "CS1", int(w), i,
                f"切换到 {m.game.strategy_sets[i][k]!r} 后落在玩家 {i} 出 "
                f"{m.game.strategy_sets[i][landed[w, k]]!r} 的状态 {closest[w, k]}",
            ))
        for w in np.flatnonzero(closest[states, own] != states):
            violations.append(Violation("CS2", int(w), i, f"不切换时指向状态 {closest[w, own[w]]}"))

        totals = beliefs.sum(axis=1)
        bad = (np.abs(totals - 1) > tol) | np.any(beliefs < -tol, axis=1)
        for w in np.flatnonzero(bad):
            violations.append(Violation("NORM", int(w), i, f"信念总和 {totals[w]:.15g}"))

        same_own = own[:, None] == own[None, :]
        own_mass = np.where(same_own, beliefs, 0.0).sum(axis=1)
        for w in np.flatnonzero(np.abs(own_mass - totals) > tol):
            violations.append(Violation("PR1", int(w), i, f"自身策略不同的状态上有概率 {totals[w] - own_mass[w]:.6g}"))

        for w in states:
            support = np.flatnonzero(beliefs[w] > 0)
            same_row = np.all(np.abs(beliefs[support] - beliefs[w]) <= tol, axis=1)
            mass = beliefs[w, support][same_row].sum()
            if abs(mass - totals[w]) > tol:
                violations.append(Violation("PR2", int(w), i, f"信念不同的状态上有概率 {totals[w] - mass:.6g}"))
    return violations


def _strategy_column(m, i, s_dev):
    return m.game.index_of(i, m.game.coerce_strategy(i, s_dev))


def derived_beliefs(m, i, omega, s_dev):
    """PR_{i,s'}(w)：信念经 closest(., i, s') 推前"""
    k = _strategy_column(m, i, s_dev)
    return np.bincount(m.closest[i][:, k], weights=m.beliefs[i][omega], minlength=m.num_states)


def eu_at_state(m, i, omega):
    k = m.strat[omega, i]
    return float(m.beliefs[i][omega] @ m.switch_utilities(i)[:, k])


def eu_at_state_switch(m, i, omega, s_dev):
    k = _strategy_column(m, i, s_dev)
    return float(derived_beliefs(m, i, omega, s_dev) @ m.switch_utilities(i)[:, k])


@dataclass
class StateUtilityReport:
    eu: float
    eu_switch: dict
    rational: bool

    @property
    def best_switch(self):
        if not self.eu_switch:
            return None
        return max(self.eu_switch, key=self.eu_switch.get)


def is_rational_at(m, i, omega):
    """EU_i(w) >= EU_i(w, s') 对所有 s' 成立（弱不等式，容差 TOLERANCE）"""
    utilities = m.switch_utilities(i)
    weights = m.beliefs[i][omega]
    support = np.flatnonzero(weights)
    own = m.strat[omega, i]
    eu = float(weights @ utilities[:, own])

    # 推前后的期望：sum_{w''} PR_i(w)(w'') U[f(w'', i, k), k]
    columns = np.arange(utilities.shape[1])
    targets = m.closest[i][support]
    switched = (weights[support][:, None] * utilities[targets, columns[None, :]]).sum(axis=0)

    strategies = m.game.strategy_sets[i]
    eu_switch = {strategies[k]: float(switched[k]) for k in columns if k != own}
    rational = all(value <= eu + config.TOLERANCE for value in eu_switch.values())
    return StateUtilityReport(eu, eu_switch, rational)


# ---------------------------------------------------------------------------
# 构造
# ---------------------------------------------------------------------------

class _StateSpace:
    def __init__(self):
        self.keys = []
        self.index = {}

    def add(self, profile, aux=()):
        key = (tuple(profile), tuple(aux))
        if key not in self.index:
            self.index[key] = len(self.keys)
            self.keys.append(key)
        return self.index[key]

    def __contains__(self, key):
        return key in self.index

    def __len__(self):
        return len(self.keys)


def _probability_vectors(game, sigma):
    """每个玩家一条 |S_i| 长的浮点概率向量"""
    vectors = []
    for i in game.players:
        vec = np.zeros(game.strategy_count(i))
        for s, p in sigma.distributions[i]:
            vec[game.index_of(i, s)] = float(p)
        vectors.append(vec)
    return vectors


def _check_state_budget(count):
    if count > config.STRUCTURE_STATE_BUDGET:
        raise BudgetExceededError("反事实结构状态数", count, config.STRUCTURE_STATE_BUDGET)


def check_nash(game, sigma):
    """混合纳什检查（精确有理数），不是纳什时抛 NotNashError"""
    game = _as_game(game)
    for i in game.players:
        check_budget(f"玩家 {i} 的纳什检查", game.strategy_count(i) * sigma.others_count(i))
        value = expected_payoff(game, i, sigma.support(i)[0], sigma)
        for s in sigma.support(i)[1:]:
            other = expected_payoff(game, i, s, sigma)
            if other != value:
                raise NotNashError(f"玩家 {i} 的支撑策略 {sigma.support(i)[0]!r} 与 {s!r} 收益不等，不是纳什均衡")
        for s in game.strategy_sets[i]:
            if expected_payoff(game, i, s, sigma) > value:
                raise NotNashError(f"玩家 {i} 偏离到 {s!r} 严格获利，不是纳什均衡")


def _anchor_profile(game, tensor, i, s, pick):
    """玩家 i 固定出 s，其余玩家取使 u_i 最大（np.argmax）或最小（np.argmin）的组合，平局取下标字典序最小"""
    k = game.index_of(i, s)
    u = np.take(tensor[..., i], k, axis=i).astype(float)
    others = tuple(int(x) for x in np.unravel_index(int(pick(u.ravel())), u.shape))
    index = others[:i] + (k,) + others[i:]
    return tuple(game.strategy_sets[j][x] for j, x in enumerate(index))


def build_nash_structure(game, sigma, check=True):
    """
    纳什均衡的见证结构。
    Omega = 支撑组合 + 单边偏离组合 + 支撑外策略的锚点组合。
    支撑内的玩家：信念为 (s_i, sigma_{-i})，closest 不透明（目标不在 Omega 时落到参考支撑组合 s0 的单边偏离上）。
    支撑外的玩家 i 出 s：信念为锚点 (s, 使 u_i 最大的 s_{-i}) 的点质量，
    切换到 s' 时落到 (s', 使 u_i 最小的 s_{-i})。
    """
    game = _as_game(game)
    if check:
        check_nash(game, sigma)
    support = [profile for profile, _ in sigma.support_profiles()]
    on_support = [set(sigma.support(i)) for i in game.players]
    off_support = [[s for s in game.strategy_sets[i] if s not in on_support[i]] for i in game.players]

    space = _StateSpace()
    for profile in support:
        space.add(profile)
    for profile in support:
        for i in game.players:
            for s in off_support[i]:
                space.add(replace(profile, i, s))
                _check_state_budget(len(space))
    _check_state_budget(len(space))

    optimistic, punishing = {}, {}
    if any(off_support):
        tensor = cached_payoff_tensor(game)
        for i in game.players:
            if not off_support[i]:
                continue
            for s in off_support[i]:
                optimistic[i, s] = _anchor_profile(game, tensor, i, s, np.argmax)
            for s in game.strategy_sets[i]:
                punishing[i, s] = _anchor_profile(game, tensor, i, s, np.argmin)
        for profile in itertools.chain(optimistic.values(), punishing.values()):
            space.add(profile)
            _check_state_budget(len(space))

        rule = game.payoff_rule
        hopeless = [
            (i, s) for (i, s), anchor in optimistic.items()
            if any(float(rule(punishing[i, t], i)) > float(rule(anchor, i)) + config.TOLERANCE
                   for t in game.strategy_sets[i] if t != s)
        ]
        if hopeless:
            logger.warning("以下支撑外策略在任何信念下都不理性，出这些策略的状态无法满足理性: %s", hopeless)

    reference = support[0]
    profiles = [key[0] for key in space.keys]
    n_states = len(profiles)
    closest, beliefs = [], []
    for i in game.players:
        strategies = game.strategy_sets[i]
        table = np.empty((n_states, len(strategies)), dtype=np.int64)
        matrix = np.zeros((n_states, n_states))
        for w, profile in enumerate(profiles):
            own = profile[i]
            for k, s in enumerate(strategies):
                if s == own:
                    target = profile
                elif own in on_support[i]:
                    target = replace(profile, i, s)
                    if (target, ()) not in space:
                        target = replace(reference, i, s)
                else:
                    target = punishing[i, s]
                table[w, k] = space.index[(target, ())]

            if own in on_support[i]:
                for others, prob in sigma.others(i):
                    matrix[w, space.index[(replace(others, i, own), ())]] += float(prob)
            else:
                matrix[w, space.index[(optimistic[i, own], ())]] = 1.0
        closest.append(table)
        beliefs.append(matrix)
    logger.info("纳什见证结构: %d 个状态（支撑组合 %d 个）", n_states, len(support))
    return CounterfactualStructure(game, profiles, closest, beliefs, name="nash")


def _profile_grid(game):
    shape = tuple(game.strategy_count(i) for i in game.players)
    indices = np.array(list(np.ndindex(*shape)), dtype=np.int64).reshape(-1, game.num_players)
    return shape, indices


def punishment_profile(game, sigma, i, own, deviation, tensor=None, strict=True, value=None):
    """
    对支撑策略 own 与偏离 deviation，找 s'_{-i} 使 u_i(deviation, s'_{-i}) <= u_i(own, sigma_{-i})，
    多个时取策略下标字典序最小者。strict=False 且不存在时返回使偏离收益最小的 s'_{-i}。
    返回其他玩家的策略下标元组（第 i 位为偏离的下标）。
    """
    game = _as_game(game)
    tensor = cached_payoff_tensor(game) if tensor is None else tensor
    value = expected_payoff(game, i, own, sigma) if value is None else value
    k = game.index_of(i, deviation)
    u_dev = np.take(tensor[..., i], k, axis=i)
    hits = np.argwhere((u_dev <= value).astype(bool))
    if len(hits):
        others = tuple(int(x) for x in hits[0])
    elif strict:
        raise IncoherentProfileError((i, own, deviation))
    else:
        flat = np.argmin(u_dev.astype(float).ravel())
        others = tuple(int(x) for x in np.unravel_index(flat, u_dev.shape))
    return others[:i] + (k,) + others[i:]


def build_coherent_structure(game, sigma, strict=True):
    """
    一致组合的见证结构：Omega = S。
    支撑外的状态上信念为自身的点质量、closest 不透明；
    支撑内的状态上信念为 (s_i, sigma_{-i})，切换到 s' 时落到惩罚组合 (s', s'_{-i})。
    """
    game = _as_game(game)
    shape, grid = _profile_grid(game)
    n_states = len(grid)
    _check_state_budget(n_states)
    tensor = cached_payoff_tensor(game)
    probs = _probability_vectors(game, sigma)
    profiles = [tuple(game.strategy_sets[i][k] for i, k in enumerate(row)) for row in grid]
    states = np.arange(n_states)

    closest, beliefs = [], []
    for i in game.players:
        own = grid[:, i]
        stride = int(np.prod(shape[i + 1:], dtype=np.int64))
        columns = np.arange(shape[i])
        table = states[:, None] + (columns[None, :] - own[:, None]) * stride

        others_prob = np.ones(n_states)
        for j in game.players:
            if j != i:
                others_prob *= probs[j][grid[:, j]]
        matrix = np.where(own[:, None] == own[None, :], others_prob[None, :], 0.0)

        in_support = probs[i][own] > 0
        off = np.flatnonzero(~in_support)
        matrix[off] = 0.0
        matrix[off, off] = 1.0

        for s in sigma.support(i):
            k_own = game.index_of(i, s)
            value = expected_payoff(game, i, s, sigma)
            rows = np.flatnonzero(own == k_own)
            for k, deviation in enumerate(game.strategy_sets[i]):
                if k == k_own:
                    continue
                target = punishment_profile(
                    game, sigma, i, s, deviation, tensor=tensor, strict=strict, value=value
                )
                table[rows, k] = np.ravel_multi_index(target, shape)
        closest.append(table)
        beliefs.append(matrix)
    return CounterfactualStructure(game, profiles, closest, beliefs, name="coherent")


def _typed_beliefs(game, space_profiles, bits, i, probs, alpha):
    """
    PR_i(s, v)(s', v')：s'_i = s_i、v'_i = v_i 时为
    prod_{j != i} sigma_j(s'_j) * (alpha_i 若 v'_j = 1 否则 1 - alpha_i)，其余为 0。
    同一 (s_i, v_i) 组内的信念相同。
    """
    n_states = len(space_profiles)
    weight = np.ones(n_states)
    for j in game.players:
        if j == i:
            continue
        weight *= probs[j][space_profiles[:, j]]
        weight *= np.where(bits[:, j] == 1, alpha, 1.0 - alpha)
    group = space_profiles[:, i] * 2 + bits[:, i]
    return np.where(group[:, None] == group[None, :], weight[None, :], 0.0)


def _typed_structure(dilemma, alphas, sigma, keep, route_all, name):
    game = dilemma.game
    n = game.num_players
    space = _StateSpace()
    for profile in itertools.product(*game.strategy_sets):
        if keep(profile):
            for v in itertools.product((0, 1), repeat=n):
                space.add(profile, v)
    _check_state_budget(len(space))

    profiles = [key[0] for key in space.keys]
    bits = np.array([key[1] for key in space.keys], dtype=np.int64)
    strat = np.array([[game.index_of(j, s) for j, s in enumerate(p)] for p in profiles], dtype=np.int64)
    probs = _probability_vectors(game, sigma)
    nash = dilemma.nash_profile

    closest, beliefs = [], []
    for i in game.players:
        strategies = game.strategy_sets[i]
        table = np.empty((len(profiles), len(strategies)), dtype=np.int64)
        for w, (profile, v) in enumerate(space.keys):
            to_nash = route_all(i, profile)
            for k, s in enumerate(strategies):
                if s == profile[i]:
                    table[w, k] = w
                    continue
                target = tuple(
                    s if j == i else (nash[j] if to_nash or v[j] == 1 else profile[j]) for j in range(n)
                )
                table[w, k] = space.index[(target, v)]
        closest.append(table)
        beliefs.append(_typed_beliefs(game, strat, bits, i, probs, float(alphas[i])))
    return CounterfactualStructure(game, profiles, closest, beliefs, aux=[key[1] for key in space.keys], name=name)


def build_typed_pd_structure(alpha_1, alpha_2, beta_1, beta_2, b, c):
    """
    囚徒困境的类型结构：Omega = {C,D}^2 x {0,1}^2，共 16 个状态。
    玩家 i 偏离时，v_j = 1 的对手改出 D，否则保持原策略；
    玩家 i 的信念中对手的察觉位以 alpha_i 取 1。
    """
    dilemma = make_prisoners_dilemma(b, c)
    sigma = MixedProfile.two_point(dilemma, (beta_1, beta_2))
    return _typed_structure(
        dilemma, (alpha_1, alpha_2), sigma,
        keep=lambda profile: True,
        route_all=lambda i, profile: False,
        name="typed_pd",
    )


def build_typed_structure(dilemma, alphas, betas):
    """
    N 人类型结构（扩展构造，用于与信念模块交叉检验）。
    Omega = 至多一个玩家不在 {合作, 背叛} 中的组合 x {0,1}^N。
    只有在 i 合作且其他人都在 {合作, 背叛} 中时按察觉位改道；
    其他状态上 i 切换策略，其他人全部改出纳什分量。
    """
    n = dilemma.num_players
    if len(alphas) != n:
        raise StructureError("alphas 长度与玩家数不一致")
    sigma = MixedProfile.two_point(dilemma, betas)
    two_point = [{dilemma.cooperate(j), dilemma.defect(j)} for j in range(n)]

    def keep(profile):
        return sum(profile[j] not in two_point[j] for j in range(n)) <= 1

    def route_all(i, profile):
        if profile[i] != dilemma.cooperate(i):
            return True
        return any(profile[j] not in two_point[j] for j in range(n) if j != i)

    count = 0
    for profile in itertools.product(*dilemma.game.strategy_sets):
        count += keep(profile)
        if count * 2**n > config.STRUCTURE_STATE_BUDGET:
            raise BudgetExceededError("类型结构状态数", count * 2**n, config.STRUCTURE_STATE_BUDGET)
    return _typed_structure(dilemma, alphas, sigma, keep, route_all, name="typed")


# ---------------------------------------------------------------------------
# JSON 文档
# ---------------------------------------------------------------------------

def structure_to_document(m, dilemma=None):
    """
    {"game", "states", "closest", "beliefs"}；
    closest 只列出目标不是状态自身的条目，beliefs 每行只列出非零概率。
    """
    game_doc = game_to_document(dilemma if dilemma is not None else m.game)
    states = [
        {"profile": [encode_value(s) for s in profile], "aux": list(aux)}
        for profile, aux in zip(m.profiles, m.aux)
    ]
    closest = []
    for w in range(m.num_states):
        for i in m.game.players:
            for k, target in enumerate(m.closest[i][w]):
                if target != w:
                    closest.append({
                        "state": w,
                        "player": i,
                        "strategy": encode_value(m.game.strategy_sets[i][k]),
                        "target": int(target),
                    })
    beliefs = [
        [{str(int(t)): float(row[t]) for t in np.flatnonzero(row)} for row in m.beliefs[i]]
        for i in m.game.players
    ]
    return {"game": game_doc, "states": states, "closest": closest, "beliefs": beliefs}


def _require(condition, path, message):
    if not condition:
        raise StructureError(f"{path}: {message}")


def structure_from_document(doc):
    """解析结构文档；格式错误抛 StructureError（消息带 JSON 路径），公理问题留给 validate_structure"""
    _require(isinstance(doc, dict), "$", "结构文档必须是对象")
    for key in ("game", "states", "closest", "beliefs"):
        _require(key in doc, "$", f"缺少字段 {key!r}")
    try:
        game = _as_game(dilemma_from_document(doc["game"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise StructureError(f"$.game: {exc}") from exc

    states = doc["states"]
    _require(isinstance(states, list) and states, "$.states", "必须是非空数组")
    profiles, aux = [], []
    for w, state in enumerate(states):
        path = f"$.states[{w}]"
        _require(isinstance(state, dict) and "profile" in state, path, "必须包含 profile")
        try:
            profiles.append(game.normalize_profile(state["profile"]))
        except (TypeError, ValueError) as exc:
            raise StructureError(f"{path}.profile: {exc}") from exc
        aux.append(tuple(state.get("aux", ())))
    n_states = len(profiles)

    closest = [
        np.repeat(np.arange(n_states, dtype=np.int64)[:, None], game.strategy_count(i), axis=1)
        for i in game.players
    ]
    for e, entry in enumerate(doc["closest"]):
        path = f"$.closest[{e}]"
        _require(isinstance(entry, dict), path, "必须是对象")
        for key in ("state", "player", "strategy", "target"):
            _require(key in entry, path, f"缺少字段 {key!r}")
        w, i, target = entry["state"], entry["player"], entry["target"]
        _require(isinstance(w, int) and 0 <= w < n_states, f"{path}.state", f"状态下标 {w!r} 越界")
        _require(isinstance(i, int) and 0 <= i < game.num_players, f"{path}.player", f"玩家下标 {i!r} 越界")
        _require(isinstance(target, int) and 0 <= target < n_states, f"{path}.target", f"状态下标 {target!r} 越界")
        try:
            k = game.index_of(i, game.coerce_strategy(i, entry["strategy"]))
        except (TypeError, ValueError) as exc:
            raise StructureError(f"{path}.strategy: {exc}") from exc
        closest[i][w, k] = target

    rows = doc["beliefs"]
    _require(isinstance(rows, list) and len(rows) == game.num_players, "$.beliefs", "每个玩家一组信念")
    beliefs = []
    for i, player_rows in enumerate(rows):
        _require(
            isinstance(player_rows, list) and len(player_rows) == n_states,
            f"$.beliefs[{i}]", f"需要 {n_states} 行",
        )
        matrix = np.zeros((n_states, n_states))
        for w, row in enumerate(player_rows):
            path = f"$.beliefs[{i}][{w}]"
            _require(isinstance(row, dict), path, "必须是 {状态下标: 概率} 对象")
            for key, prob in row.items():
                try:
                    t = int(key)
                except ValueError:
                    raise StructureError(f"{path}: 状态下标 {key!r} 不是整数") from None
                _require(0 <= t < n_states, path, f"状态下标 {t} 越界")
                _require(
                    isinstance(prob, (int, float)) and not isinstance(prob, bool), f"{path}.{key}", "概率必须是数值"
                )
                matrix[w, t] = prob
        beliefs.append(matrix)
    return CounterfactualStructure(game, profiles, closest, beliefs, aux=aux)
