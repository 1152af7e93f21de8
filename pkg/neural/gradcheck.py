import numpy as np
from pydantic import BaseModel, ConfigDict

from neural.architectures import SequentialModel
from neural.losses import loss_value
from neural.training import loss_and_gradients
from states import LossName


class GradCheckResult(BaseModel):
    """Результат сравнения аналитических градиентов с центральными разностями."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    names: list[str]
    analytic: np.ndarray
    numeric: np.ndarray
    relative_error: np.ndarray
    kinks: np.ndarray  # True, если шаг ±h пересекает излом ReLU

    def worst_smooth_error(self) -> float:
        smooth = self.relative_error[~self.kinks]
        return float(smooth.max()) if smooth.size else 0.0


def check_gradients(model: SequentialModel, x: np.ndarray, targets: np.ndarray, n_params: int = 2000,
                    h: float = 1e-3, rng_seed: int = 0, loss: LossName | None = None,
                    floor: float = 1e-6) -> GradCheckResult:
    """
    Проверка обратного прохода конечными разностями на случайных параметрах.

    Для каждого выбранного параметра θ сравнивается аналитический градиент с (L(θ+h) - L(θ-h)) / 2h.
    Если маска ReLU при θ+h и θ-h различается, точка помечается как излом и не участвует в оценке.

    :param model: Модель (для точной проверки — в float64).
    :param n_params: Число проверяемых параметров (без повторов).
    :param floor: Нижняя граница знаменателя относительной ошибки.
    """
    loss = LossName(loss or model.default_loss)
    _, grads = loss_and_gradients(model, x, targets, loss)
    parameters = model.parameters()
    sizes = np.array([value.size for _, value in parameters])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng(rng_seed)
    picks = rng.choice(offsets[-1], size=min(n_params, int(offsets[-1])), replace=False)

    def objective():
        output = model.forward(x)
        return loss_value(loss, output, np.asarray(targets).reshape(output.shape))

    names, analytic, numeric, kinks = [], [], [], []
    for flat in np.sort(picks):
        block = int(np.searchsorted(offsets, flat, side="right") - 1)
        name, value = parameters[block]
        index = np.unravel_index(int(flat - offsets[block]), value.shape)
        original = value[index]

        value[index] = original + h
        f_plus, pattern_plus = objective(), model.activation_pattern(x)
        value[index] = original - h
        f_minus, pattern_minus = objective(), model.activation_pattern(x)
        value[index] = original

        names.append(f"{name}{list(index)}")
        analytic.append(float(grads[name][index]))
        numeric.append((f_plus - f_minus) / (2.0 * h))
        kinks.append(not np.array_equal(pattern_plus, pattern_minus))

    analytic, numeric = np.array(analytic), np.array(numeric)
    denominator = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return GradCheckResult(names=names, analytic=analytic, numeric=numeric,
                           relative_error=np.abs(analytic - numeric) / denominator, kinks=np.array(kinks))
