class TranslucencyError(Exception):
    """本项目所有异常的基类"""


class GameError(TranslucencyError, ValueError):
    """博弈、策略组合或参数不合法"""


class BudgetExceededError(TranslucencyError):
    """穷举规模超过预算"""

    def __init__(self, what, required, budget):
        self.what = what
        self.required = required
        self.budget = budget
        super().__init__(f"{what} 需要枚举 {required} 项，超过预算 {budget}")


class BeliefModelError(TranslucencyError):
    """子集混合分布与乘积分布不一致"""


class StructureError(TranslucencyError, ValueError):
    """反事实结构的形状或内容无法解析"""


class NotNashError(TranslucencyError, ValueError):
    """给定组合不是纳什均衡"""


class IncoherentProfileError(TranslucencyError, ValueError):
    """组合不满足一致性（coherence），witness = (玩家, 支撑策略, 偏离策略)"""

    def __init__(self, witness):
        self.witness = witness
        player, strategy, deviation = witness
        super().__init__(
            f"组合不一致: 玩家 {player} 的支撑策略 {strategy!r} 无法抵御偏离 {deviation!r}"
        )


class QRENonConvergenceError(TranslucencyError):
    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"QRE 迭代 {iterations} 次未收敛，残差 {residual:.3e}")


class ConfigError(TranslucencyError, ValueError):
    """配置文档不符合 schema，消息中带 JSON 路径"""


class SpotCheckError(TranslucencyError):
    """扫描抽查发现与穷举引擎不一致的行"""
