"""Named trainable parameters shared by factual and counterfactual passes."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from .engine import Array


class ParameterStore:
    """Ordered mapping of name -> trainable Array.

    Both forward passes read the same Array identities, so one gradient
    map covers everything either pass touched.
    """

    def __init__(self):
        self._params: dict[str, Array] = {}

    def add(self, name: str, values: np.ndarray) -> Array:
        if name in self._params:
            raise ContractError(f"parameter '{name}' already exists")
        arr = Array(np.asarray(values, dtype=np.float64), requires_grad=True)
        self._params[name] = arr
        return arr

    def __getitem__(self, name: str) -> Array:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def total_count(self) -> int:
        return sum(p.data.size for p in self._params.values())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self._params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        if set(state) != set(self._params):
            missing = set(self._params) - set(state)
            extra = set(state) - set(self._params)
            raise ContractError(
                f"parameter name mismatch: missing {sorted(missing)}, extra {sorted(extra)}")
        for name, values in state.items():
            param = self._params[name]
            values = np.asarray(values, dtype=np.float64)
            if values.shape != param.data.shape:
                raise ContractError(
                    f"shape mismatch for '{name}': {values.shape} vs {param.data.shape}")
            param.data = values.copy()


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization."""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)
