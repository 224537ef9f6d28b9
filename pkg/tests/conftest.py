import json
from pathlib import Path

import numpy as np
import pytest

from trace_ratio_duality.model import example_gs1

INPUT_DIR = Path(__file__).parent.parent / "input"


@pytest.fixture
def gs1():
    return example_gs1()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def gs1_path():
    return INPUT_DIR / "gs1.json"


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON-serializable object (or raw text) under tmp_path and return the path."""

    def _write(name: str, data) -> Path:
        path = tmp_path / name
        text = data if isinstance(data, str) else json.dumps(data)
        path.write_text(text, encoding="utf-8")
        return path

    return _write


def random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    m = rng.standard_normal((n, n))
    return 0.5 * (m + m.T)


def random_orthogonal(rng: np.random.Generator, n: int, p: int | None = None) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n if p is None else p)))
    return q * np.sign(np.diag(r))
