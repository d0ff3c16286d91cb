import logging
import os
import sys

import numpy as np
import pandas as pd

from . import config

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["kind", "param_snapshot", "alpha", "beta", "rational", "binding", "threshold"]
QRE_COLUMNS = ["kind", "param_snapshot", "lambda", "player", "coop_prob", "residual"]


def format_number(value):
    """12 位有效数字，与区域无关；None 写成空字段"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if np.isnan(value):
        return ""
    return format(value, f".{config.CSV_SIGNIFICANT_DIGITS}g")


def rows_to_frame(rows, columns):
    return pd.DataFrame(list(rows), columns=columns)


def save_table(frame, path=None):
    """
    所有单元格先格式化成字符串再写出，保证同一输入逐字节一致。
    path 为 None 时写到标准输出。
    """
    text_frame = frame.astype(object)
    for column in text_frame.columns:
        if column not in ("kind", "param_snapshot"):
            text_frame[column] = text_frame[column].map(format_number)
    if path is None:
        text_frame.to_csv(sys.stdout, index=False, lineterminator="\n")
        return
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    text_frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    logger.info("结果已保存: %s (行数=%d)", path, len(frame))


def load_table(path):
    """读回扫描 CSV，rational 列转为布尔值"""
    frame = pd.read_csv(path, dtype={"param_snapshot": str}, keep_default_na=False)
    if "rational" in frame.columns:
        frame["rational"] = frame["rational"].map({"true": True, "false": False, True: True, False: False})
    return frame


def feasible_regions(frame):
    """{param_snapshot: 可行 (alpha, beta) 点集}"""
    regions = {}
    for snapshot, group in frame.groupby("param_snapshot", sort=False):
        ok = group[group["rational"].astype(bool)]
        regions[snapshot] = frozenset(zip(ok["alpha"].astype(float), ok["beta"].astype(float)))
    return regions


def region_sizes(frame):
    return frame.groupby("param_snapshot", sort=False)["rational"].apply(lambda col: int(col.astype(bool).sum()))


def feasible_fraction(frame):
    return int(frame["rational"].astype(bool).sum()) / len(frame)


def parse_snapshot(snapshot):
    """"b=4;c=1" -> {"b": 4.0, "c": 1.0}"""
    values = {}
    for part in snapshot.split(";"):
        name, _, value = part.partition("=")
        values[name] = float(value)
    return values


def inclusion_violations(frame, parameter, direction="grow"):
    """
    在其他参数固定的每一组快照里按 parameter 升序排列，检查可行集的单调包含：
    direction="grow" 要求 F(小) ⊆ F(大)，"shrink" 要求 F(大) ⊆ F(小)。
    返回违例列表，每项包含两个快照与缺失的点。
    """
    if direction not in ("grow", "shrink"):
        raise ValueError(f"未知方向 {direction!r}")
    regions = feasible_regions(frame)
    groups = {}
    for snapshot in regions:
        values = parse_snapshot(snapshot)
        key = tuple(sorted((k, v) for k, v in values.items() if k != parameter))
        groups.setdefault(key, []).append((values[parameter], snapshot))

    violations = []
    for members in groups.values():
        members.sort()
        for (_, low), (_, high) in zip(members, members[1:]):
            smaller, larger = (low, high) if direction == "grow" else (high, low)
            missing = regions[smaller] - regions[larger]
            if missing:
                violations.append({"from": smaller, "to": larger, "missing": sorted(missing)})
    return violations
