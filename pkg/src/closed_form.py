"""
四种社会困境中合作为半透明理性的闭式条件，以及 Bertrand 条件里的 f(gamma, N)。

reading="corrected"（默认）为与穷举引擎一致的条件；
reading="printed" 保留原始文献中的写法，仅用于对照。
两者只在旅行者困境 alpha < 1/2 与 Bertrand 小 alpha 区域不同。
"""
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .errors import GameError
from .games import DilemmaKind, check_params
from .numeric import to_fraction

READINGS = ("corrected", "printed")
INF = float("inf")


def _check_reading(reading):
    if reading not in READINGS:
        raise ValueError(f"未知的 reading {reading!r}，可选 {READINGS}")


def f_gamma_sum(gamma, n):
    """sum_{k=0}^{N-1} C(N-1,k) (1-gamma)^k gamma^(N-1-k) / (k+1)"""
    m = n - 1
    return sum(comb(m, k) * (1 - gamma) ** k * gamma ** (m - k) / (k + 1) for k in range(n))


def f_gamma(gamma, n):
    """
    f(gamma, N)：偏离到最低价 L 时，与其他最低价者平分的期望份额。
    gamma 离 1 足够远时用解析式 (1 - gamma^N) / (N (1 - gamma))，否则直接求和。
    有理数输入得到有理数输出。
    """
    if n < 2:
        raise GameError(f"玩家数必须 >= 2，当前为 {n}")
    if isinstance(gamma, int):
        gamma = to_fraction(gamma)
    if not 0 <= gamma <= 1:
        raise GameError(f"gamma = {float(gamma)} 不在 [0,1] 内")
    if gamma < 1 - 1e-9:
        return (1 - gamma**n) / (n * (1 - gamma))
    return f_gamma_sum(gamma, n)


@dataclass(frozen=True)
class CooperationVerdict:
    """rational 当且仅当 binding_quantity >= threshold"""
    rational: bool
    binding_quantity: object
    threshold: object
    reading: str = "corrected"


def _verdict(binding, threshold, reading):
    return CooperationVerdict(bool(binding >= threshold), binding, threshold, reading)


def _ratio(numerator, denominator):
    return INF if denominator == 0 else numerator / denominator


def travelers_bound(l, h, alpha, beta, reading="corrected"):
    """
    旅行者困境中 bonus 的上界：合作 (H) 不劣于偏离到 L，也不劣于偏离到 H-1。
    偏离到 L 的界为 (H-L) beta / (1 - alpha beta)；
    alpha < 1/2 时偏离到 H-1 的界为 (1 + alpha (H-L-1)) / (1 - 2 alpha)，
    printed 写法为 (H-L-1) / (1 - 2 alpha)。
    """
    _check_reading(reading)
    bounds = [_ratio((h - l) * beta, 1 - alpha * beta)]
    if alpha < Fraction(1, 2):
        if reading == "printed":
            bounds.append(Fraction(h - l - 1) / (1 - 2 * alpha))
        elif h - l >= 2:
            bounds.append((1 + alpha * (h - l - 1)) / (1 - 2 * alpha))
    return min(bounds)


def bertrand_threshold(n, l, h, alpha, beta, reading="corrected"):
    """
    beta^(N-1) 需要达到的门槛。偏离到 L 得 f(gamma,N) L，
    偏离到 H-1 只有其他人全部仍出 H 时才得 H-1，即 gamma^(N-1) (H-1)。
    """
    _check_reading(reading)
    gamma = (1 - alpha) * beta
    best_deviation = f_gamma(gamma, n) * l
    if reading == "corrected" and h - l >= 2:
        best_deviation = max(best_deviation, gamma ** (n - 1) * (h - 1))
    return n * best_deviation / h


def cooperation_condition(kind, params, alpha, beta, reading="corrected"):
    """
    闭式判定：类型 (alpha, beta) 的玩家在给定博弈中合作是否理性。
    全程有理数运算，边界点精确判定。
    """
    _check_reading(reading)
    kind = DilemmaKind(kind)
    p = check_params(kind, params, allow_limits=True)
    alpha, beta = to_fraction(alpha), to_fraction(beta)
    for name, value in (("alpha", alpha), ("beta", beta)):
        if not 0 <= value <= 1:
            raise GameError(f"{name} = {float(value)} 不在 [0,1] 内")

    if kind is DilemmaKind.PD:
        return _verdict(alpha * beta * p["b"], p["c"], reading)
    if kind is DilemmaKind.PGG:
        n, rho = p["n"], p["rho"]
        return _verdict(alpha * beta * rho * (n - 1), 1 - rho, reading)
    if kind is DilemmaKind.TD:
        # bonus 越小越容易合作，binding 取上界、threshold 取 bonus
        return _verdict(travelers_bound(p["l"], p["h"], alpha, beta, reading), p["bonus"], reading)
    n, l, h = p["n"], p["l"], p["h"]
    return _verdict(beta ** (n - 1), bertrand_threshold(n, l, h, alpha, beta, reading), reading)


def bertrand_lower_bound_check(beta, l, h, n):
    """beta^(N-1) < L/H 时，无论 alpha 取何值合作都不理性（因为 f >= 1/N）"""
    beta = to_fraction(beta)
    return beta ** (n - 1) < Fraction(l, h)
