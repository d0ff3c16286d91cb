import json
import logging

from pydantic import ValidationError

from .errors import ConfigError

logger = logging.getLogger(__name__)


def load_json(path):
    """
    读取 JSON 文档。解析失败时抛 ConfigError，消息带行号与列号。
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"{path}: 无法读取文件 ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: JSON 解析失败: {exc.msg}") from exc


def _format_location(loc):
    path = "$"
    for part in loc:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def parse_document(model, doc, source="<config>"):
    """按 pydantic 模型校验文档，错误信息逐条带 JSON 路径"""
    try:
        return model.model_validate(doc)
    except ValidationError as exc:
        lines = [f"{_format_location(err['loc'])}: {err['msg']}" for err in exc.errors()]
        raise ConfigError(f"{source}: 配置不合法\n  " + "\n  ".join(lines)) from exc


def load_config(model, path):
    logger.info("读取配置 %s", path)
    return parse_document(model, load_json(path), source=str(path))
