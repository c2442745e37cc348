"""Shared fixtures: tree builders, level-order state capture, synthetic CSVs."""

from __future__ import annotations

import json

import numpy as np
import pandas as pd
import pytest
from hypothesis import HealthCheck, settings

from xenovert import XenovertConfig, grow

settings.register_profile(
    "default",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def level_order_state(tree) -> list[tuple[float, float]]:
    """(q, v) per node in level order, via the public snapshot payload."""
    return [tuple(node) for node in json.loads(tree.snapshot())["nodes"]]


def tree_with_inorder(values, **config_kwargs):
    """Grow a tree and assign the given boundary values in in-order order."""
    n = len(values)
    levels = n.bit_length()
    if 2**levels - 1 != n:
        raise ValueError(f"need 2^L - 1 values, got {n}")
    tree = grow(XenovertConfig(levels=levels, **config_kwargs))
    it = iter(values)

    def walk(node):
        if node is None:
            return
        walk(node.left)
        node.q = float(next(it))
        walk(node.right)

    walk(tree.root)
    return tree


@pytest.fixture
def diabetes_csv(tmp_path):
    """Pima-style table with ages straddling the 24-year split."""
    rng = np.random.default_rng(7)
    n = 120
    age = rng.integers(18, 60, size=n)
    age[:10] = 24  # boundary rows must land on the test side
    df = pd.DataFrame(
        {
            "Pregnancies": rng.integers(0, 10, size=n),
            "Glucose": rng.integers(70, 180, size=n),
            "BMI": np.round(rng.uniform(18, 45, size=n), 1),
            "Age": age,
            "Outcome": rng.integers(0, 2, size=n),
        }
    )
    path = tmp_path / "diabetes.csv"
    df.to_csv(path, index=False)
    return path


@pytest.fixture
def abalone_csv(tmp_path):
    """UCI-style table, spaced column names included."""
    rng = np.random.default_rng(11)
    n = 160
    whole = np.round(rng.uniform(0.05, 2.5, size=n), 4)
    df = pd.DataFrame(
        {
            "Sex": rng.choice(["M", "F", "I"], size=n),
            "Length": np.round(rng.uniform(0.1, 0.8, size=n), 3),
            "Diameter": np.round(rng.uniform(0.1, 0.6, size=n), 3),
            "Height": np.round(rng.uniform(0.02, 0.25, size=n), 3),
            "Whole weight": whole,
            "Shucked weight": np.round(whole * rng.uniform(0.3, 0.5, size=n), 4),
            "Viscera weight": np.round(whole * rng.uniform(0.1, 0.3, size=n), 4),
            "Shell weight": np.round(whole * rng.uniform(0.2, 0.4, size=n), 4),
            "Rings": rng.integers(3, 25, size=n),
        }
    )
    path = tmp_path / "abalone.csv"
    df.to_csv(path, index=False)
    return path


@pytest.fixture
def iowa_csv(tmp_path):
    """Ames-style table with build years on both sides of 2000."""
    rng = np.random.default_rng(13)
    n = 140
    year = rng.integers(1950, 2011, size=n)
    year[:5] = 2000  # boundary rows must land on the training side
    area = rng.integers(600, 4000, size=n)
    qual = rng.integers(1, 11, size=n)
    df = pd.DataFrame(
        {
            "YearBuilt": year,
            "GrLivArea": area,
            "OverallQual": qual,
            "SalePrice": (area * 90 + qual * 12_000 + rng.normal(0, 8_000, size=n)).round(),
        }
    )
    path = tmp_path / "iowa.csv"
    df.to_csv(path, index=False)
    return path


@pytest.fixture
def mosquito_csv(tmp_path):
    """Temporal table: numeric covariates discovered from the file."""
    rng = np.random.default_rng(17)
    n = 100
    year = rng.integers(2010, 2022, size=n)
    df = pd.DataFrame(
        {
            "Year": year,
            "Temperature": np.round(rng.uniform(5, 30, size=n), 1),
            "Rainfall": np.round(rng.uniform(0, 200, size=n), 1),
            "Mosquito Indicator": np.round(rng.uniform(0, 100, size=n), 2),
        }
    )
    path = tmp_path / "mosquito.csv"
    df.to_csv(path, index=False)
    return path
