from decimal import Decimal
from fractions import Fraction
from numbers import Rational

import numpy as np


def to_fraction(value):
    """
    把参数转成精确有理数。
    浮点数按最短 repr 转换（0.05 -> 1/20），这样网格上的边界点可以精确判定。
    """
    if isinstance(value, bool):
        raise TypeError("布尔值不能作为数值参数")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise ValueError(f"非有限数值: {value}")
        return Fraction(repr(float(value)))
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (str, Decimal)):
        return Fraction(value)
    raise TypeError(f"无法转换为有理数: {value!r}")


def frange(start, stop, step):
    """闭区间等差网格，全程有理数运算，避免 0.1*3 之类的累积误差"""
    start, stop, step = to_fraction(start), to_fraction(stop), to_fraction(step)
    if step <= 0:
        raise ValueError("step 必须为正")
    values = []
    k = 0
    while start + k * step <= stop:
        values.append(start + k * step)
        k += 1
    return values
