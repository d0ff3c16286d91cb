import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from . import config
from .errors import BudgetExceededError, GameError
from .numeric import to_fraction

logger = logging.getLogger(__name__)


class DilemmaKind(str, Enum):
    PD = "pd"
    PGG = "pgg"
    BERTRAND = "bertrand"
    TD = "td"


# 每种博弈的标量参数名（顺序即扫描时的网格坐标顺序）
PARAM_NAMES = {
    DilemmaKind.PD: ("b", "c"),
    DilemmaKind.PGG: ("n", "rho"),
    DilemmaKind.BERTRAND: ("n", "l", "h"),
    DilemmaKind.TD: ("l", "h", "bonus"),
}

INTEGER_PARAMS = {"n", "l", "h"}


@dataclass(frozen=True, eq=False)
class NormalFormGame:
    """
    有限 N 人标准型博弈。
    收益由规则函数 payoff_rule(profile, i) 计算，不生成收益矩阵，
    因此 Bertrand / 旅行者困境的大整数策略网格也可以直接使用。
    """
    num_players: int
    strategy_sets: tuple
    payoff_rule: Callable[[tuple, int], Fraction]
    name: str = "game"
    table: Any = None  # 仅收益表博弈：精确收益数组
    _index: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.num_players < 2:
            raise GameError(f"玩家数必须 >= 2，当前为 {self.num_players}")
        if len(self.strategy_sets) != self.num_players:
            raise GameError("策略集个数与玩家数不一致")
        lookups = []
        for i, strategies in enumerate(self.strategy_sets):
            if len(strategies) == 0:
                raise GameError(f"玩家 {i} 的策略集为空")
            # range 自带 O(1) 的 index/in，不需要额外的查找表
            if isinstance(strategies, range):
                lookups.append(None)
            else:
                lookup = {s: k for k, s in enumerate(strategies)}
                if len(lookup) != len(strategies):
                    raise GameError(f"玩家 {i} 的策略集有重复元素")
                lookups.append(lookup)
        object.__setattr__(self, "_index", tuple(lookups))

    @property
    def players(self):
        return range(self.num_players)

    def strategy_count(self, i):
        return len(self.strategy_sets[i])

    def profile_count(self):
        count = 1
        for strategies in self.strategy_sets:
            count *= len(strategies)
        return count

    def is_numeric(self, i):
        return isinstance(self.strategy_sets[i], range) or all(
            isinstance(s, (int, Fraction)) for s in self.strategy_sets[i]
        )

    def coerce_strategy(self, i, raw):
        """把外部输入（JSON、浮点数、"1/3" 字符串）转换成策略集里的标准元素"""
        strategies = self.strategy_sets[i]
        if isinstance(strategies, range):
            value = to_fraction(raw) if not isinstance(raw, int) else raw
            if isinstance(value, Fraction):
                if value.denominator != 1:
                    raise GameError(f"玩家 {i} 的策略必须为整数，收到 {raw!r}")
                value = int(value)
            if value not in strategies:
                raise GameError(f"策略 {raw!r} 不在玩家 {i} 的策略集 [{strategies.start}, {strategies.stop - 1}] 中")
            return value
        if not isinstance(raw, bool) and raw in self._index[i]:
            return strategies[self._index[i][raw]]
        if self.is_numeric(i):
            try:
                value = to_fraction(raw)
            except (TypeError, ValueError):
                value = None
            if value is not None and value in self._index[i]:
                return value
        raise GameError(f"策略 {raw!r} 不在玩家 {i} 的策略集中")

    def index_of(self, i, strategy):
        strategies = self.strategy_sets[i]
        if isinstance(strategies, range):
            return strategies.index(strategy)
        try:
            return self._index[i][strategy]
        except KeyError:
            raise GameError(f"策略 {strategy!r} 不在玩家 {i} 的策略集中") from None

    def normalize_profile(self, profile):
        if len(profile) != self.num_players:
            raise GameError(f"策略组合长度 {len(profile)} 与玩家数 {self.num_players} 不一致")
        return tuple(self.coerce_strategy(i, s) for i, s in enumerate(profile))


@dataclass(frozen=True, eq=False)
class SocialDilemma:
    """带有唯一纳什组合（背叛）与唯一福利最大组合（合作）标记的博弈"""
    game: NormalFormGame
    nash_profile: tuple
    welfare_profile: tuple
    kind: DilemmaKind
    params: dict
    # 四种社会困境都是对称博弈，收益只依赖于其他人中合作者的个数
    symmetric: bool = True

    @property
    def num_players(self):
        return self.game.num_players

    def cooperate(self, i):
        return self.welfare_profile[i]

    def defect(self, i):
        return self.nash_profile[i]

    def profile_with(self, i, own, cooperators):
        """玩家 i 出 own，其他玩家中 cooperators 指定的人合作、其余背叛"""
        profile = []
        for j in self.game.players:
            if j == i:
                profile.append(own)
            elif j in cooperators:
                profile.append(self.cooperate(j))
            else:
                profile.append(self.defect(j))
        return tuple(profile)

    def snapshot(self):
        return ";".join(f"{name}={format_param(self.params[name])}" for name in PARAM_NAMES[self.kind])


def format_param(value):
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return format(float(value), ".12g")
    return str(value)


@dataclass(frozen=True)
class MixedProfile:
    """
    混合策略组合：每个玩家一个 (策略, 概率) 元组，只保存支撑集。
    概率为精确有理数。
    """
    distributions: tuple

    @classmethod
    def from_mappings(cls, game, mappings):
        if len(mappings) != game.num_players:
            raise GameError("混合策略个数与玩家数不一致")
        dists = []
        for i, mapping in enumerate(mappings):
            merged = {}
            for raw, p in dict(mapping).items():
                s = game.coerce_strategy(i, raw)
                p = to_fraction(p)
                if p < 0:
                    raise GameError(f"玩家 {i} 的策略 {raw!r} 概率为负")
                merged[s] = merged.get(s, Fraction(0)) + p
            total = sum(merged.values(), Fraction(0))
            if abs(total - 1) > config.TOLERANCE:
                raise GameError(f"玩家 {i} 的混合策略概率和为 {float(total)}，不等于 1")
            support = tuple(sorted(
                ((s, p) for s, p in merged.items() if p > 0),
                key=lambda item: game.index_of(i, item[0]),
            ))
            if not support:
                raise GameError(f"玩家 {i} 的支撑集为空")
            dists.append(support)
        return cls(tuple(dists))

    @classmethod
    def pure(cls, game, profile):
        profile = game.normalize_profile(profile)
        return cls(tuple(((s, Fraction(1)),) for s in profile))

    @classmethod
    def two_point(cls, dilemma, betas):
        """每个玩家以 beta_i 合作、1 - beta_i 背叛"""
        if len(betas) != dilemma.num_players:
            raise GameError("betas 长度与玩家数不一致")
        mappings = []
        for i, beta in enumerate(betas):
            beta = to_fraction(beta)
            if not 0 <= beta <= 1:
                raise GameError(f"beta_{i} = {float(beta)} 不在 [0,1] 内")
            mappings.append({dilemma.cooperate(i): beta, dilemma.defect(i): 1 - beta})
        return cls.from_mappings(dilemma.game, mappings)

    @property
    def num_players(self):
        return len(self.distributions)

    def support(self, i):
        return tuple(s for s, _ in self.distributions[i])

    def probability(self, i, strategy):
        for s, p in self.distributions[i]:
            if s == strategy:
                return p
        return Fraction(0)

    def support_profiles(self):
        """遍历支撑集上的纯策略组合及其概率"""
        for combo in itertools.product(*self.distributions):
            prob = Fraction(1)
            for _, p in combo:
                prob *= p
            yield tuple(s for s, _ in combo), prob

    def others(self, i):
        """遍历 sigma_{-i} 的支撑：(其他人的策略元组, 概率)，元组中第 i 位为 None"""
        dists = [((None, Fraction(1)),) if j == i else d for j, d in enumerate(self.distributions)]
        for combo in itertools.product(*dists):
            prob = Fraction(1)
            for _, p in combo:
                prob *= p
            yield tuple(s for s, _ in combo), prob

    def others_count(self, i):
        count = 1
        for j, d in enumerate(self.distributions):
            if j != i:
                count *= len(d)
        return count


# ---------------------------------------------------------------------------
# 收益计算
# ---------------------------------------------------------------------------

def payoff(game, profile, i):
    """u_i(profile)，返回精确有理数"""
    if not 0 <= i < game.num_players:
        raise GameError(f"玩家下标 {i} 超出范围 [0, {game.num_players - 1}]")
    profile = game.normalize_profile(profile)
    return game.payoff_rule(profile, i)


def payoffs(game, profile):
    profile = game.normalize_profile(profile)
    return tuple(game.payoff_rule(profile, i) for i in game.players)


def replace(profile, i, strategy):
    return profile[:i] + (strategy,) + profile[i + 1:]


def expected_payoff(game, i, own, sigma):
    """u_i(own, sigma_{-i})，按 sigma_{-i} 的乘积支撑精确求和"""
    total = Fraction(0)
    for others, prob in sigma.others(i):
        total += prob * game.payoff_rule(replace(others, i, own), i)
    return total


def check_budget(what, required, budget=None):
    budget = config.ENUMERATION_BUDGET if budget is None else budget
    if required > budget:
        raise BudgetExceededError(what, required, budget)


def payoff_tensor(game, budget=None):
    """
    生成精确收益张量，形状 (|S_1|, ..., |S_N|, N)，元素为 Fraction。
    仅用于小规模穷举（纳什枚举、QRE、一致性检查）。
    """
    if game.table is not None:
        return game.table
    check_budget("收益张量", game.profile_count(), budget)
    shape = tuple(game.strategy_count(i) for i in game.players)
    tensor = np.empty(shape + (game.num_players,), dtype=object)
    for idx in np.ndindex(*shape):
        profile = tuple(game.strategy_sets[i][k] for i, k in enumerate(idx))
        for i in game.players:
            tensor[idx + (i,)] = game.payoff_rule(profile, i)
    return tensor


@lru_cache(maxsize=4)
def cached_payoff_tensor(game, budget=None):
    """按博弈对象缓存，一致性检查与结构构造会反复用到同一张表"""
    return payoff_tensor(game, budget)


# ---------------------------------------------------------------------------
# 四种社会困境
# ---------------------------------------------------------------------------

def _as_int(name, value):
    value = to_fraction(value)
    if value.denominator != 1:
        raise GameError(f"参数 {name} 必须为整数，收到 {float(value)}")
    return int(value)


def check_params(kind, params, allow_limits=False):
    """
    校验并规范化参数：整数参数转 int，其余转 Fraction。
    allow_limits=True 时允许公共品博弈取 rho = 1 的极限（闭式条件会用到）。
    """
    kind = DilemmaKind(kind)
    missing = [name for name in PARAM_NAMES[kind] if name not in params]
    if missing:
        raise GameError(f"{kind.value} 缺少参数: {', '.join(missing)}")
    clean = {}
    for name in PARAM_NAMES[kind]:
        clean[name] = _as_int(name, params[name]) if name in INTEGER_PARAMS else to_fraction(params[name])

    if kind is DilemmaKind.PD:
        if not clean["c"] > 0:
            raise GameError(f"囚徒困境要求 c > 0，收到 c={float(clean['c'])}")
        if not clean["b"] > clean["c"]:
            raise GameError(f"囚徒困境要求 b > c，收到 b={float(clean['b'])}, c={float(clean['c'])}")
    elif kind is DilemmaKind.PGG:
        n, rho = clean["n"], clean["rho"]
        if n < 2:
            raise GameError(f"公共品博弈要求 n >= 2，收到 n={n}")
        upper_ok = rho <= 1 if allow_limits else rho < 1
        if not (rho > Fraction(1, n) and upper_ok):
            raise GameError(
                f"公共品博弈要求 1/n < rho < 1（端点处纳什或福利最大组合不唯一），收到 rho={float(rho)}, n={n}"
            )
    elif kind is DilemmaKind.BERTRAND:
        n, l, h = clean["n"], clean["l"], clean["h"]
        if n < 2:
            raise GameError(f"Bertrand 竞争要求 n >= 2，收到 n={n}")
        if l < 2:
            raise GameError(
                f"Bertrand 竞争要求价格下限 l >= 2：l={l} 时纯策略纳什均衡不唯一"
                f"（例如 ({l},{l}) 与 ({l + 1},{l + 1}) 都是均衡）"
            )
        if not l < h:
            raise GameError(f"Bertrand 竞争要求 l < h，收到 l={l}, h={h}")
    elif kind is DilemmaKind.TD:
        l, h, bonus = clean["l"], clean["h"], clean["bonus"]
        if not 0 < l < h:
            raise GameError(f"旅行者困境要求 0 < l < h，收到 l={l}, h={h}")
        if not bonus > 0:
            raise GameError(f"旅行者困境要求 bonus > 0，收到 bonus={float(bonus)}")
    return clean


def prisoners_dilemma_game(b, c):
    b, c = to_fraction(b), to_fraction(c)

    def rule(profile, i):
        other = profile[1 - i]
        gain = b if other == "C" else Fraction(0)
        cost = c if profile[i] == "C" else Fraction(0)
        return gain - cost

    return NormalFormGame(2, (("C", "D"), ("C", "D")), rule, name="prisoners_dilemma")


def public_goods_game(n, rho, grid=None):
    grid = config.PGG_DEFAULT_GRID if grid is None else grid
    if grid < 1:
        raise GameError(f"贡献网格 grid 必须 >= 1，收到 {grid}")
    rho = to_fraction(rho)
    contributions = tuple(Fraction(k, grid) for k in range(grid + 1))

    def rule(profile, i):
        return 1 - profile[i] + rho * sum(profile, Fraction(0))

    return NormalFormGame(n, (contributions,) * n, rule, name="public_goods")


def bertrand_game(n, l, h):
    def rule(profile, i):
        lowest = min(profile)
        if profile[i] != lowest:
            return Fraction(0)
        return Fraction(lowest, profile.count(lowest))

    return NormalFormGame(n, (range(l, h + 1),) * n, rule, name="bertrand")


def travelers_dilemma_game(l, h, bonus):
    bonus = to_fraction(bonus)

    def rule(profile, i):
        mine, theirs = profile[i], profile[1 - i]
        if mine == theirs:
            return Fraction(mine)
        if mine < theirs:
            return mine + bonus
        return theirs - bonus

    return NormalFormGame(2, (range(l, h + 1),) * 2, rule, name="travelers_dilemma")


def table_game(strategies, table):
    """
    用户给定收益表的博弈：table 形状 (|S_1|, ..., |S_N|, N)。
    供反事实结构模块使用（例如类似猜硬币的混合均衡）。
    """
    strategy_sets = tuple(tuple(s) for s in strategies)
    n = len(strategy_sets)
    exact = np.vectorize(to_fraction, otypes=[object])(np.asarray(table, dtype=object))
    expected_shape = tuple(len(s) for s in strategy_sets) + (n,)
    if exact.shape != expected_shape:
        raise GameError(f"收益表形状 {exact.shape} 与策略集 {expected_shape} 不一致")
    lookups = [{s: k for k, s in enumerate(strategies)} for strategies in strategy_sets]

    def rule(profile, i):
        idx = tuple(lookups[j][s] for j, s in enumerate(profile))
        return exact[idx + (i,)]

    return NormalFormGame(n, strategy_sets, rule, name="table", table=exact)


def make_prisoners_dilemma(b, c):
    p = check_params(DilemmaKind.PD, {"b": b, "c": c})
    game = prisoners_dilemma_game(p["b"], p["c"])
    return SocialDilemma(game, ("D", "D"), ("C", "C"), DilemmaKind.PD, p)


def make_public_goods(n, rho, grid=None):
    grid = config.PGG_DEFAULT_GRID if grid is None else grid
    p = check_params(DilemmaKind.PGG, {"n": n, "rho": rho})
    game = public_goods_game(p["n"], p["rho"], grid)
    p["grid"] = grid
    zero, one = Fraction(0), Fraction(1)
    return SocialDilemma(game, (zero,) * p["n"], (one,) * p["n"], DilemmaKind.PGG, p)


def make_bertrand(n, l, h):
    p = check_params(DilemmaKind.BERTRAND, {"n": n, "l": l, "h": h})
    game = bertrand_game(p["n"], p["l"], p["h"])
    return SocialDilemma(game, (p["l"],) * p["n"], (p["h"],) * p["n"], DilemmaKind.BERTRAND, p)


def make_travelers_dilemma(l, h, bonus):
    p = check_params(DilemmaKind.TD, {"l": l, "h": h, "bonus": bonus})
    game = travelers_dilemma_game(p["l"], p["h"], p["bonus"])
    return SocialDilemma(game, (p["l"],) * 2, (p["h"],) * 2, DilemmaKind.TD, p)


def make_dilemma(kind, params, grid=None):
    kind = DilemmaKind(kind)
    if kind is DilemmaKind.PD:
        return make_prisoners_dilemma(params["b"], params["c"])
    if kind is DilemmaKind.PGG:
        return make_public_goods(params["n"], params["rho"], grid if grid is not None else params.get("grid"))
    if kind is DilemmaKind.BERTRAND:
        return make_bertrand(params["n"], params["l"], params["h"])
    return make_travelers_dilemma(params["l"], params["h"], params["bonus"])


# ---------------------------------------------------------------------------
# 社会困境公理的穷举验证
# ---------------------------------------------------------------------------

@dataclass
class SocialDilemmaReport:
    nash_profiles: list
    welfare_profiles: list
    unique_nash: Any
    unique_welfare: Any
    dominance_ok: bool

    @property
    def is_social_dilemma(self):
        return self.unique_nash is not None and self.unique_welfare is not None and self.dominance_ok


def _profile_at(game, idx):
    return tuple(game.strategy_sets[i][k] for i, k in enumerate(idx))


def enumerate_pure_nash(game, budget=None, tensor=None):
    tensor = payoff_tensor(game, budget) if tensor is None else tensor
    mask = np.ones(tensor.shape[:-1], dtype=bool)
    for i in game.players:
        u_i = tensor[..., i]
        best = u_i.max(axis=i, keepdims=True)
        mask &= (u_i == best).astype(bool)
    return [_profile_at(game, tuple(idx)) for idx in np.argwhere(mask)]


def enumerate_welfare_maximizers(game, budget=None, tensor=None):
    tensor = payoff_tensor(game, budget) if tensor is None else tensor
    welfare = tensor.sum(axis=-1)
    best = welfare.max()
    mask = (welfare == best).astype(bool)
    return [_profile_at(game, tuple(idx)) for idx in np.argwhere(mask)]


def verify_social_dilemma(game, budget=None):
    """
    穷举所有纯策略组合：找出全部纳什均衡与福利最大组合，
    并检查每个玩家在福利组合下的收益严格高于纳什组合。
    """
    if isinstance(game, SocialDilemma):
        game = game.game
    tensor = payoff_tensor(game, budget)
    nash = enumerate_pure_nash(game, tensor=tensor)
    welfare = enumerate_welfare_maximizers(game, tensor=tensor)
    unique_nash = nash[0] if len(nash) == 1 else None
    unique_welfare = welfare[0] if len(welfare) == 1 else None
    dominance_ok = False
    if unique_nash is not None and unique_welfare is not None:
        dominance_ok = all(
            game.payoff_rule(unique_welfare, i) > game.payoff_rule(unique_nash, i) for i in game.players
        )
    if len(nash) != 1:
        logger.info("%s: 纯策略纳什均衡共 %d 个，不唯一", game.name, len(nash))
    return SocialDilemmaReport(nash, welfare, unique_nash, unique_welfare, dominance_ok)


# ---------------------------------------------------------------------------
# JSON 文档 {"kind", "params", "grid"}
# ---------------------------------------------------------------------------

def encode_value(value):
    """Fraction -> int / "p/q" 字符串，保持精确"""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return value.numerator
        return f"{value.numerator}/{value.denominator}"
    return value


def dilemma_to_document(dilemma):
    doc = {
        "kind": dilemma.kind.value,
        "params": {name: encode_value(dilemma.params[name]) for name in PARAM_NAMES[dilemma.kind]},
    }
    if dilemma.kind is DilemmaKind.PGG:
        doc["grid"] = dilemma.params["grid"]
    return doc


def game_to_document(game):
    if isinstance(game, SocialDilemma):
        return dilemma_to_document(game)
    table = getattr(game, "table", None)
    if table is None:
        raise GameError("只有社会困境或收益表博弈可以序列化")
    return {
        "kind": "table",
        "strategies": [[encode_value(s) for s in strategies] for strategies in game.strategy_sets],
        "payoffs": np.vectorize(encode_value, otypes=[object])(table).tolist(),
    }


def dilemma_from_document(doc):
    kind = doc.get("kind")
    if kind == "table":
        return table_game(doc["strategies"], doc["payoffs"])
    try:
        kind = DilemmaKind(kind)
    except ValueError:
        raise GameError(f"未知的博弈类型 {kind!r}") from None
    return make_dilemma(kind, doc.get("params", {}), doc.get("grid"))
