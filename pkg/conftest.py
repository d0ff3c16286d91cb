import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src import config  # noqa: E402
from src.games import make_prisoners_dilemma, make_travelers_dilemma  # noqa: E402


@pytest.fixture(autouse=True)
def quiet_progress(monkeypatch):
    monkeypatch.setattr(config, "SHOW_PROGRESS", False)


@pytest.fixture
def pd():
    return make_prisoners_dilemma(4, 1)


@pytest.fixture
def small_td():
    return make_travelers_dilemma(2, 10, 2)


@pytest.fixture
def write_config(tmp_path):
    """把字典写成 JSON 配置文件，返回路径字符串"""

    def _write(doc, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc), encoding="utf-8")
        return str(path)

    return _write
