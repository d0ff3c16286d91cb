import argparse
import json
import logging
import os
import sys

from . import cli, config
from .errors import (
    BudgetExceededError,
    ConfigError,
    GameError,
    IncoherentProfileError,
    NotNashError,
    QRENonConvergenceError,
    SpotCheckError,
    StructureError,
    TranslucencyError,
)
from .preprocess import load_config
from .schemas import CheckConfig, EquilibriumConfig, PopulationConfig, QREConfig, SweepConfig

logger = logging.getLogger("src")

# 输入类错误（配置、参数、预算、结构文档）退出码 2，其余领域失败退出码 1
INPUT_ERRORS = (ConfigError, GameError, BudgetExceededError, StructureError)
DOMAIN_ERRORS = (SpotCheckError, QRENonConvergenceError, NotNashError, IncoherentProfileError, TranslucencyError)

COMMANDS = {
    "check": CheckConfig,
    "sweep": SweepConfig,
    "equilibrium": EquilibriumConfig,
    "population": PopulationConfig,
    "qre": QREConfig,
}


def setup_logging(verbose=False):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False


def build_parser():
    parser = argparse.ArgumentParser(
        prog="python -m src.main",
        description="社会困境中的半透明理性：闭式条件、穷举引擎、均衡与对照模型",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="输出调试日志")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON 配置文件")
        p.add_argument("--out", default=None, help="结果输出路径（默认标准输出）")
        p.add_argument("--budget", type=int, default=None, help=f"穷举上限（默认 {config.ENUMERATION_BUDGET}）")

    common(sub.add_parser("check", help="单点判定合作是否理性"))
    sweep = sub.add_parser("sweep", help="参数 / 类型网格扫描，写 CSV")
    common(sweep)
    sweep.add_argument("--spot-check", action="store_true", default=None, help="用穷举引擎抽查扫描结果")
    common(sub.add_parser("equilibrium", help="两点混合组合的均衡判定"))
    common(sub.add_parser("population", help="类型分布下的合作比例"))
    validate = sub.add_parser("validate-structure", help="检查反事实结构文档")
    validate.add_argument("path", help="结构 JSON 文件")
    validate.add_argument("--out", default=None, help="结果输出路径（默认标准输出）")
    common(sub.add_parser("qre", help="logit QRE 求解"))
    return parser


def write_json(result, out=None):
    """键排序、固定缩进，同一输入逐字节一致"""
    text = json.dumps(result, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    os.makedirs(directory, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info("结果已保存: %s", out)


def dispatch(args):
    if args.command == "validate-structure":
        result, code = cli.cmd_validate_structure(args.path)
        write_json(result, args.out)
        return code

    cfg = load_config(COMMANDS[args.command], args.config)
    if args.command == "sweep":
        _, code = cli.cmd_sweep(cfg, out=args.out, budget=args.budget, spot=args.spot_check)
        return code
    if args.command == "check":
        result, code = cli.cmd_check(cfg, args.budget)
    elif args.command == "equilibrium":
        result, code = cli.cmd_equilibrium(cfg, args.budget)
    elif args.command == "population":
        result, code = cli.cmd_population(cfg)
    else:
        result, code = cli.cmd_qre(cfg)
    write_json(result, args.out)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    logger.info("========== 半透明理性分析 [%s] ==========", args.command)
    try:
        code = dispatch(args)
    except INPUT_ERRORS as exc:
        logger.error("%s", exc)
        return cli.EXIT_INPUT
    except DOMAIN_ERRORS as exc:
        logger.error("%s", exc)
        return cli.EXIT_DOMAIN
    logger.info("========== 完成，退出码 %d ==========", code)
    return code


if __name__ == "__main__":
    sys.exit(main())
