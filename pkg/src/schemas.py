"""
各子命令的 JSON 配置文档（pydantic 模型）。
数值字段接受整数、浮点数或 "p/q" 形式的字符串，统一在使用处转成 Fraction。
"""
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import (
    AfterValidator,
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    StrictFloat,
    StrictInt,
    StrictStr,
    model_validator,
)

from . import config
from .numeric import frange, to_fraction


def _parseable(value):
    try:
        to_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ValueError(f"无法解析为有理数: {value!r}") from None
    return value


def _not_bool(value):
    if isinstance(value, bool):
        raise ValueError(f"布尔值不能作为数值: {value!r}")
    return value


def _probability(value):
    if not 0 <= to_fraction(value) <= 1:
        raise ValueError(f"{value!r} 不在 [0,1] 内")
    return value


Number = Annotated[
    Union[StrictInt, StrictFloat, StrictStr], BeforeValidator(_not_bool), AfterValidator(_parseable)
]
Probability = Annotated[Number, AfterValidator(_probability)]
Kind = Literal["pd", "pgg", "bertrand", "td"]
Reading = Literal["corrected", "printed"]


class _Document(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class RangeSpec(_Document):
    """闭区间网格 {start, stop, step}"""
    start: Number
    stop: Number
    step: Number

    @model_validator(mode="after")
    def _check(self):
        if to_fraction(self.step) <= 0:
            raise ValueError("step 必须为正")
        if to_fraction(self.start) > to_fraction(self.stop):
            raise ValueError("start 不能大于 stop")
        return self

    def values(self):
        return frange(self.start, self.stop, self.step)


GridSpec = Union[RangeSpec, List[Number], Number]


def grid_values(spec):
    """RangeSpec / 列表 / 单个数 -> Fraction 列表"""
    if isinstance(spec, RangeSpec):
        return spec.values()
    if isinstance(spec, list):
        return [to_fraction(v) for v in spec]
    return [to_fraction(spec)]


def _unit_grid():
    return RangeSpec(start=0, stop=1, step="1/20")


class GameConfig(_Document):
    kind: Kind
    params: Dict[str, Number]
    grid: Optional[StrictInt] = Field(default=None, ge=1)


class CheckConfig(GameConfig):
    alpha: Probability
    beta: Probability
    player: int = Field(default=0, ge=0)
    reading: Reading = "corrected"


SweepMode = Literal["cooperation", "te", "te_typed", "qre", "charness_rabin"]


class SweepConfig(_Document):
    kind: Kind
    params: Dict[str, GridSpec]
    grid: Optional[StrictInt] = Field(default=None, ge=1)
    mode: SweepMode = "cooperation"
    alpha: GridSpec = Field(default_factory=_unit_grid)
    beta: GridSpec = Field(default_factory=_unit_grid)
    lambdas: Optional[GridSpec] = Field(default=None, alias="lambda")
    d_cr: Probability = "1/2"
    reading: Reading = "corrected"
    spot_check: bool = False
    spot_check_fraction: float = Field(default=config.SPOT_CHECK_FRACTION, gt=0, le=1)
    seed: int = config.SPOT_CHECK_SEED
    out: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.mode == "qre" and self.lambdas is None:
            raise ValueError("qre 模式需要 lambda 网格")
        for name in ("alpha", "beta"):
            for v in grid_values(getattr(self, name)):
                if not 0 <= v <= 1:
                    raise ValueError(f"{name} 网格取值 {float(v)} 不在 [0,1] 内")
        return self


class EquilibriumConfig(GameConfig):
    betas: List[Probability]
    alphas: Optional[List[Probability]] = None
    verify_structure: bool = False


class PopulationType(_Document):
    alpha: Probability
    beta: Probability
    weight: Number


class TypeGrid(_Document):
    alpha: GridSpec
    beta: GridSpec


class PopulationConfig(GameConfig):
    types: Optional[List[PopulationType]] = None
    type_grid: Optional[TypeGrid] = None
    reading: Reading = "corrected"

    @model_validator(mode="after")
    def _check(self):
        if (self.types is None) == (self.type_grid is None):
            raise ValueError("types 与 type_grid 必须且只能给出一个")
        if self.types is not None:
            if not self.types:
                raise ValueError("types 不能为空")
            weights = [to_fraction(t.weight) for t in self.types]
            if any(w < 0 for w in weights):
                raise ValueError("权重不能为负")
            if abs(sum(weights) - 1) > config.TOLERANCE:
                raise ValueError(f"权重之和为 {float(sum(weights))}，不等于 1")
        return self


class QREConfig(GameConfig):
    lam: Number = Field(alias="lambda")
    damping: float = Field(default=config.QRE_DAMPING, gt=0, le=1)
    max_iterations: int = Field(default=config.QRE_MAX_ITERATIONS, ge=1)
