"""Parameter containers and the module tree.

Modules own Parameters (value + gradient slot) and optional buffers (running
statistics). Forward passes cache whatever the matching backward pass needs;
backward passes accumulate into Parameter.grad and return the input gradient.
Composite modules call their children in reverse order, so no tape is needed.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np


class Parameter:
    """A trainable tensor with a gradient slot of the same shape."""

    __slots__ = ("value", "grad", "trainable")

    def __init__(self, value: np.ndarray, trainable: bool = True):
        self.value = np.ascontiguousarray(value)
        self.grad = np.zeros_like(self.value)
        self.trainable = trainable

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self) -> int:
        return self.value.size

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter(shape={self.value.shape}, dtype={self.value.dtype})"


def he_uniform(rng: np.random.Generator, shape, fan_in: int, dtype=np.float32) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Module:
    """Base class: child modules and parameters register on attribute set."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_modules", {})
        object.__setattr__(self, "_buffer_names", [])
        object.__setattr__(self, "training", True)

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._params[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        object.__setattr__(self, name, value)
        self._buffer_names.append(name)

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        if name not in self._buffer_names:
            raise KeyError(f"unknown buffer {name!r}")
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, param in self._params.items():
            yield prefix + name, param
        for name, child in self._modules.items():
            yield from child.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> Iterator[Parameter]:
        for _, p in self.named_parameters():
            yield p

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name in self._buffer_names:
            yield prefix + name, getattr(self, name)
        for name, child in self._modules.items():
            yield from child.named_buffers(f"{prefix}{name}.")

    def submodule(self, path: str) -> "Module":
        """Resolve a dotted path like "blocks.0.bn1" to the child module."""
        mod = self
        if path:
            for part in path.split("."):
                try:
                    mod = mod._modules[part]
                except KeyError:
                    raise KeyError(f"no submodule {path!r}") from None
        return mod

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def train(self) -> "Module":
        object.__setattr__(self, "training", True)
        for child in self._modules.values():
            child.train()
        return self

    def eval(self) -> "Module":
        object.__setattr__(self, "training", False)
        for child in self._modules.values():
            child.eval()
        return self

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def forward(self, x):  # pragma: no cover - interface
        raise NotImplementedError

    def backward(self, grad):  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class ModuleList(Module):
    """Sequence of child modules registered under their indices."""

    def __init__(self, modules=()):
        super().__init__()
        self._items = []
        for m in modules:
            self.append(m)

    def append(self, module: Module) -> None:
        self._modules[str(len(self._items))] = module
        self._items.append(module)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, idx):
        return self._items[idx]


class Sequential(ModuleList):
    """Chain of modules; backward runs the chain in reverse."""

    def forward(self, x):
        for m in self._items:
            x = m.forward(x)
        return x

    def backward(self, grad):
        for m in reversed(self._items):
            grad = m.backward(grad)
        return grad
