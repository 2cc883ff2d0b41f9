from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np
import pytest

from penlik_engine.model import GaussianModel


def _orthonormal_design(rng: np.random.Generator, n: int, p: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    return np.sqrt(n) * q


@pytest.fixture
def orthonormal_model() -> Callable[..., GaussianModel]:
    """Model with X'X = nI and X'y/n equal to the requested z."""

    def build(z: Sequence[float], n: int = 200, seed: int = 0, noise: float = 1.0) -> GaussianModel:
        rng = np.random.default_rng(seed)
        z = np.asarray(z, dtype=float)
        x = _orthonormal_design(rng, n, z.size)
        q = x / np.sqrt(n)
        r = noise * rng.standard_normal(n)
        r -= q @ (q.T @ r)
        return GaussianModel.from_arrays(x, x @ z + r)

    return build


@pytest.fixture
def random_model() -> Callable[..., GaussianModel]:
    def build(
        n: int = 80,
        p: int = 6,
        seed: int = 0,
        beta: Optional[Sequence[float]] = None,
        noise: float = 1.0,
    ) -> GaussianModel:
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, p))
        b = np.zeros(p) if beta is None else np.asarray(beta, dtype=float)
        return GaussianModel.from_arrays(x, x @ b + noise * rng.standard_normal(n))

    return build


@pytest.fixture
def sparse_model(random_model) -> GaussianModel:
    """n=200, p=8 with three strong signals and five true zeros."""
    return random_model(n=200, p=8, seed=11, beta=[3.0, -2.0, 1.5, 0, 0, 0, 0, 0])
