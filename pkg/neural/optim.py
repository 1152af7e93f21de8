import numpy as np


class Adam:
    """Оптимизатор Adam; состояние моментов хранится по имени параметра."""

    def __init__(self, learning_rate: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, parameters: list[tuple[str, np.ndarray]], grads: dict[str, np.ndarray]):
        """Обновляет параметры на месте."""
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for name, value in parameters:
            grad = grads[name]
            m = self.m.setdefault(name, np.zeros_like(value, dtype=np.float64))
            v = self.v.setdefault(name, np.zeros_like(value, dtype=np.float64))
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            update = self.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            value -= update.astype(value.dtype)
