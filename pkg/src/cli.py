"""
各子命令的实现。每个 cmd_* 接收已校验的配置对象，
返回 (结果, 退出码)：结果为可写成 JSON 的字典，sweep 的表格则直接写 CSV。
"""
import itertools
import logging
import math
import sys
from fractions import Fraction

import numpy as np
from tqdm import tqdm

from . import analysis, config
from .alt_models import CharnessRabinParams, charness_rabin_cooperation, logit_qre
from .beliefs import TranslucentType, is_cooperation_rational
from .closed_form import cooperation_condition
from .counterfactual import structure_from_document, validate_structure
from .equilibrium import is_coherent, is_translucent_equilibrium, te_condition, te_condition_typed, typed_structure_verdict
from .errors import BudgetExceededError, ConfigError, GameError, SpotCheckError
from .games import (
    PARAM_NAMES,
    DilemmaKind,
    MixedProfile,
    check_budget,
    check_params,
    encode_value,
    format_param,
    make_dilemma,
)
from .numeric import to_fraction
from .preprocess import load_json
from .schemas import grid_values

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_INPUT = 2


def _number(value):
    """JSON 数值：无穷写成字符串 "inf"，其余转 float"""
    if value is None:
        return None
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _params_document(dilemma):
    return {name: encode_value(dilemma.params[name]) for name in PARAM_NAMES[dilemma.kind]}


def _player_count(kind, params):
    return 2 if kind in (DilemmaKind.PD, DilemmaKind.TD) else params["n"]


def _progress(total, desc):
    enabled = config.SHOW_PROGRESS and sys.stderr.isatty()
    return tqdm(total=total, desc=desc, file=sys.stderr, disable=not enabled, leave=False)


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def cmd_check(cfg, budget=None):
    """闭式条件与穷举引擎同时判定单个 (博弈, alpha, beta)，两者不一致时退出码为 1"""
    dilemma = make_dilemma(cfg.kind, cfg.params, cfg.grid)
    if cfg.player >= dilemma.num_players:
        raise ConfigError(f"$.player: 玩家下标 {cfg.player} 超出范围 [0, {dilemma.num_players - 1}]")
    t = TranslucentType(cfg.alpha, cfg.beta)
    logger.info("[check] %s %s alpha=%s beta=%s", dilemma.kind.value, dilemma.snapshot(), t.alpha, t.beta)

    verdict = cooperation_condition(dilemma.kind, dilemma.params, t.alpha, t.beta, cfg.reading)
    engine = is_cooperation_rational(dilemma, cfg.player, t, budget=budget)
    agreement = verdict.rational == engine.verdict
    notes = []
    if t.alpha == 0:
        notes.append("opaque")
    if engine.exact_recheck:
        notes.append("exact_recheck")
    if not agreement:
        logger.warning("闭式条件 (%s) 与穷举引擎判定不一致", cfg.reading)

    result = {
        "kind": dilemma.kind.value,
        "params": _params_document(dilemma),
        "alpha": float(t.alpha),
        "beta": float(t.beta),
        "player": cfg.player,
        "closed_form": {
            "rational": verdict.rational,
            "binding": _number(verdict.binding_quantity),
            "threshold": _number(verdict.threshold),
            "reading": verdict.reading,
        },
        "engine": {
            "rational": engine.verdict,
            "best_deviation": encode_value(engine.best_deviation),
            "eu_coop": engine.eu_coop,
            "eu_best_dev": engine.eu_best_dev,
        },
        "agreement": agreement,
        "notes": notes,
    }
    return result, EXIT_OK if agreement else EXIT_DOMAIN


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _param_grid(cfg, kind):
    names = PARAM_NAMES[kind]
    unknown = sorted(set(cfg.params) - set(names))
    if unknown:
        raise ConfigError(f"$.params: {kind.value} 没有参数 {', '.join(unknown)}")
    missing = [name for name in names if name not in cfg.params]
    if missing:
        raise ConfigError(f"$.params: {kind.value} 缺少参数 {', '.join(missing)}")
    axes = [grid_values(cfg.params[name]) for name in names]
    return [dict(zip(names, combo)) for combo in itertools.product(*axes)]


def _sweep_rows(cfg, kind, param_grid, alphas, betas, lambdas, budget):
    """按 参数 -> alpha -> beta（qre 模式为 lambda -> 玩家）的字典序生成行"""
    rows, points = [], []
    per_combo = {
        "cooperation": len(alphas) * len(betas),
        "te": len(betas),
        "te_typed": len(alphas) * len(betas),
        "charness_rabin": len(alphas) * len(betas),
        "qre": len(lambdas),
    }[cfg.mode]
    check_budget("扫描网格", len(param_grid) * per_combo, budget)

    with _progress(len(param_grid) * per_combo, f"sweep[{cfg.mode}]") as bar:
        for params in param_grid:
            clean = check_params(kind, params, allow_limits=cfg.mode in ("cooperation", "te", "te_typed"))
            n = _player_count(kind, clean)
            snapshot = make_snapshot(kind, clean)

            if cfg.mode == "cooperation":
                for alpha in alphas:
                    for beta in betas:
                        v = cooperation_condition(kind, clean, alpha, beta, cfg.reading)
                        rows.append([kind.value, snapshot, float(alpha), float(beta),
                                     v.rational, _csv_number(v.binding_quantity), _csv_number(v.threshold)])
                        points.append((clean, alpha, beta))
                        bar.update()
            elif cfg.mode == "te":
                for beta in betas:
                    ok = te_condition(kind, clean, [beta] * n)
                    rows.append([kind.value, snapshot, None, float(beta), ok, None, None])
                    bar.update()
            elif cfg.mode == "te_typed":
                for alpha in alphas:
                    for beta in betas:
                        v = te_condition_typed(kind, clean, [alpha] * n, [beta] * n)
                        verdict = v.corrected if cfg.reading == "corrected" else v.printed
                        rows.append([kind.value, snapshot, float(alpha), float(beta), verdict, None, None])
                        bar.update()
            elif cfg.mode == "charness_rabin":
                dilemma = make_dilemma(kind, clean, cfg.grid)
                for a_cr in alphas:
                    p = CharnessRabinParams.uniform(n, a_cr, cfg.d_cr)
                    for beta in betas:
                        r = charness_rabin_cooperation(dilemma, 0, p, beta, budget)
                        rows.append([kind.value, snapshot, float(a_cr), float(beta), r.verdict, r.eu_coop, r.eu_best_dev])
                        bar.update()
            else:
                dilemma = make_dilemma(kind, clean, cfg.grid)
                for lam in lambdas:
                    result = logit_qre(dilemma, lam)
                    for i in dilemma.game.players:
                        coop = result.cooperation_probability(i, dilemma.cooperate(i))
                        rows.append([kind.value, snapshot, float(lam), i, coop, result.residual])
                    bar.update()
    return rows, points


def make_snapshot(kind, params):
    """参数快照 "b=4;c=1"，按参数名固定顺序"""
    return ";".join(f"{name}={format_param(params[name])}" for name in PARAM_NAMES[kind])


def _csv_number(value):
    return None if value is None else float(value)


def spot_check(kind, points, grid=None, fraction=None, seed=None, budget=None):
    """
    随机抽取一部分扫描点 (params, alpha, beta, 闭式判定)，
    用穷举引擎重新判定合作理性，返回不一致的点。抽样使用固定种子。
    """
    if not points:
        return []
    fraction = config.SPOT_CHECK_FRACTION if fraction is None else fraction
    seed = config.SPOT_CHECK_SEED if seed is None else seed
    rng = np.random.default_rng(seed)
    size = max(1, math.ceil(fraction * len(points)))
    picked = np.sort(rng.choice(len(points), size=size, replace=False))

    mismatches = []
    for index in picked:
        params, alpha, beta, expected = points[index]
        try:
            dilemma = make_dilemma(kind, params, grid)
        except GameError:
            # rho = 1 等极限参数只有闭式条件，没有对应的博弈
            continue
        engine = is_cooperation_rational(dilemma, 0, TranslucentType(alpha, beta), budget=budget)
        if engine.verdict != expected:
            mismatches.append({
                "param_snapshot": dilemma.snapshot(),
                "alpha": float(alpha),
                "beta": float(beta),
                "closed_form": expected,
                "engine": engine.verdict,
            })
    logger.info("抽查 %d 个点，不一致 %d 个", len(picked), len(mismatches))
    return mismatches


def cmd_sweep(cfg, out=None, budget=None, spot=None):
    """网格扫描写成 CSV；开启抽查且发现不一致时抛 SpotCheckError"""
    kind = DilemmaKind(cfg.kind)
    param_grid = _param_grid(cfg, kind)
    alphas, betas = grid_values(cfg.alpha), grid_values(cfg.beta)
    lambdas = grid_values(cfg.lambdas) if cfg.lambdas is not None else []
    logger.info("[sweep] %s 模式=%s，参数组合 %d 个", kind.value, cfg.mode, len(param_grid))

    rows, points = _sweep_rows(cfg, kind, param_grid, alphas, betas, lambdas, budget)
    columns = analysis.QRE_COLUMNS if cfg.mode == "qre" else analysis.SWEEP_COLUMNS
    frame = analysis.rows_to_frame(rows, columns)
    path = out if out is not None else cfg.out
    analysis.save_table(frame, path)

    if cfg.mode != "qre" and len(frame):
        for snapshot, size in analysis.region_sizes(frame).items():
            logger.info("  %s: 可行点 %d 个", snapshot, size)

    run_spot_check = cfg.spot_check if spot is None else spot
    if run_spot_check:
        if cfg.mode != "cooperation":
            logger.warning("抽查只适用于 cooperation 模式，已跳过")
        elif cfg.reading != "corrected":
            logger.warning("printed 写法与穷举引擎本就可能不同，已跳过抽查")
        else:
            samples = [(clean, alpha, beta, row[4]) for (clean, alpha, beta), row in zip(points, rows)]
            mismatches = spot_check(kind, samples, cfg.grid, cfg.spot_check_fraction, cfg.seed, budget)
            if mismatches:
                raise SpotCheckError(f"闭式条件与穷举引擎不一致 {len(mismatches)} 处，首个: {mismatches[0]}")
    return {"rows": len(frame), "path": path}, EXIT_OK


# ---------------------------------------------------------------------------
# equilibrium
# ---------------------------------------------------------------------------

def cmd_equilibrium(cfg, budget=None):
    """
    两点混合组合：闭式均衡条件 vs 一致性定义；
    给出 alphas 时附带区分类型的两种写法，verify_structure 时再用类型结构裁决。
    """
    dilemma = make_dilemma(cfg.kind, cfg.params, cfg.grid)
    betas = [to_fraction(b) for b in cfg.betas]
    if len(betas) != dilemma.num_players:
        raise ConfigError(f"$.betas: 需要 {dilemma.num_players} 个取值，收到 {len(betas)} 个")
    sigma = MixedProfile.two_point(dilemma, betas)
    logger.info("[equilibrium] %s %s betas=%s", dilemma.kind.value, dilemma.snapshot(), [str(b) for b in betas])

    predicate = te_condition(dilemma.kind, dilemma.params, betas)
    coherence = is_coherent(dilemma, sigma, budget)
    if cfg.verify_structure:
        is_translucent_equilibrium(dilemma, sigma, verify_structure=True, budget=budget)
    agreement = predicate == coherence.coherent
    result = {
        "kind": dilemma.kind.value,
        "params": _params_document(dilemma),
        "betas": [float(b) for b in betas],
        "te_condition": predicate,
        "is_coherent": coherence.coherent,
        "witness": None if coherence.witness is None else [encode_value(x) for x in coherence.witness],
        "agreement": agreement,
    }

    exit_code = EXIT_OK if agreement else EXIT_DOMAIN
    if cfg.alphas is not None:
        alphas = [to_fraction(a) for a in cfg.alphas]
        if len(alphas) != dilemma.num_players:
            raise ConfigError(f"$.alphas: 需要 {dilemma.num_players} 个取值，收到 {len(alphas)} 个")
        typed = te_condition_typed(dilemma.kind, dilemma.params, alphas, betas)
        typed_doc = {
            "corrected": typed.corrected,
            "printed": typed.printed,
            "readings_agree": typed.readings_agree,
            "structure": None,
        }
        if cfg.verify_structure:
            try:
                typed_doc["structure"] = typed_structure_verdict(dilemma, alphas, betas)
            except BudgetExceededError as exc:
                logger.info("类型结构超出预算，跳过: %s", exc)
            if typed_doc["structure"] is not None and typed_doc["structure"] != typed.corrected:
                exit_code = EXIT_DOMAIN
        result["typed"] = typed_doc
    return result, exit_code


# ---------------------------------------------------------------------------
# population
# ---------------------------------------------------------------------------

def _population_types(cfg):
    if cfg.types is not None:
        return [(to_fraction(t.alpha), to_fraction(t.beta), to_fraction(t.weight)) for t in cfg.types]
    alphas, betas = grid_values(cfg.type_grid.alpha), grid_values(cfg.type_grid.beta)
    for name, values in (("alpha", alphas), ("beta", betas)):
        if any(not 0 <= v <= 1 for v in values):
            raise ConfigError(f"$.type_grid.{name}: 取值必须在 [0,1] 内")
    weight = Fraction(1, len(alphas) * len(betas))
    return [(a, b, weight) for a in alphas for b in betas]


def population_cooperation_rate(kind, params, types, reading="corrected"):
    """合作为理性的类型的总权重（有理数）"""
    return sum(
        (w for alpha, beta, w in types if cooperation_condition(kind, params, alpha, beta, reading).rational),
        Fraction(0),
    )


def cmd_population(cfg):
    kind = DilemmaKind(cfg.kind)
    types = _population_types(cfg)
    rate = population_cooperation_rate(kind, cfg.params, types, cfg.reading)
    logger.info("[population] %s 类型 %d 个，合作比例 %.6g", kind.value, len(types), float(rate))
    clean = check_params(kind, cfg.params, allow_limits=True)
    result = {
        "kind": kind.value,
        "params": {name: encode_value(clean[name]) for name in PARAM_NAMES[kind]},
        "types": len(types),
        "reading": cfg.reading,
        "cooperation_rate": float(rate),
    }
    return result, EXIT_OK


# ---------------------------------------------------------------------------
# validate-structure
# ---------------------------------------------------------------------------

def cmd_validate_structure(path):
    """逐条列出结构违反的公理；存在违例时退出码为 1"""
    m = structure_from_document(load_json(path))
    violations = validate_structure(m)
    logger.info("[validate-structure] %s: %d 个状态，违例 %d 条", path, m.num_states, len(violations))
    result = {
        "name": m.name,
        "states": m.num_states,
        "players": m.num_players,
        "valid": not violations,
        "violations": [
            {"axiom": v.axiom, "state": v.state, "player": v.player, "detail": v.detail} for v in violations
        ],
    }
    return result, EXIT_OK if not violations else EXIT_DOMAIN


# ---------------------------------------------------------------------------
# qre
# ---------------------------------------------------------------------------

def cmd_qre(cfg):
    dilemma = make_dilemma(cfg.kind, cfg.params, cfg.grid)
    lam = to_fraction(cfg.lam)
    logger.info("[qre] %s %s lambda=%s", dilemma.kind.value, dilemma.snapshot(), lam)
    result = logit_qre(dilemma, lam, damping=cfg.damping, max_iterations=cfg.max_iterations)
    players = []
    for i in dilemma.game.players:
        players.append({
            "player": i,
            "coop_prob": result.cooperation_probability(i, dilemma.cooperate(i)),
            "distribution": {
                str(encode_value(s)): float(p)
                for s, p in zip(result.strategy_sets[i], result.probabilities[i])
            },
        })
    return {
        "kind": dilemma.kind.value,
        "params": _params_document(dilemma),
        "lambda": float(lam),
        "residual": result.residual,
        "iterations": result.iterations,
        "max_normalization_error": result.max_normalization_error,
        "players": players,
    }, EXIT_OK
