import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal, norm
from sklearn.neighbors import KernelDensity

from exceptions import UsageError
from states import ToyDensity

MIN_KDE_POINTS = 100
MAX_KDE_DIM = 4

# Носитель равномерного закона атаки H1* для игрушечных плотностей: квадрат [-TOY_BOX, TOY_BOX]²
TOY_BOX = 3.0
# Сетка для ранговой корреляции покрывает область, где сосредоточена плотность H0
TOY_GRID_HALF_WIDTH = 2.5
TOY_GRID_POINTS = 41

MIXTURE_MEANS = np.array([[-1.25, -1.25], [1.25, 1.25]])
MIXTURE_SIGMA = 0.6
RING_RADIUS = 1.5
RING_SIGMA = 0.25


class DensityModel:
    """Ядерная оценка плотности p(·|H0) с гауссовым ядром."""

    def __init__(self, kde: KernelDensity, dim: int, bandwidth: float):
        self.kde = kde
        self.dim = dim
        self.bandwidth = bandwidth

    def log_density(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dim:
            raise UsageError(f"Размерность точек {x.shape[1]} не совпадает с размерностью модели {self.dim}")
        return self.kde.score_samples(x)

    def density(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_density(x))


def glrt_oracle_fit(h0_points: np.ndarray, bandwidth: float) -> DensityModel:
    """
    Оценивает p(·|H0) по выборке легитимных точек.

    :param h0_points: Массив (N, d), N ≥ 100, d ≤ 4.
    :param bandwidth: Ширина гауссова ядра (> 0).
    :return: DensityModel с неотрицательной плотностью.
    :raises UsageError: при неположительной ширине ядра или неподходящей выборке.
    """
    if not bandwidth > 0:
        raise UsageError(f"Ширина ядра должна быть положительной, получено {bandwidth}")
    points = np.asarray(h0_points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] < MIN_KDE_POINTS:
        raise UsageError(f"Для оценки плотности нужно не меньше {MIN_KDE_POINTS} точек, получено {points.shape[0]}")
    if points.shape[1] > MAX_KDE_DIM:
        raise UsageError(f"Размерность {points.shape[1]} больше допустимой {MAX_KDE_DIM}")
    kde = KernelDensity(kernel="gaussian", bandwidth=float(bandwidth)).fit(points)
    return DensityModel(kde, points.shape[1], float(bandwidth))


def glrt_scores(log_density: np.ndarray) -> np.ndarray:
    """
    Γ_GLRT в шкале [0, 1]: min-max нормировка -log p(x|H0) по переданному массиву.

    Работа с логарифмом сохраняет порядок точек там, где 1 - p/max(p) округлялось бы к 1.
    Точки с нулевой плотностью (log p = -inf) получают 1.

    :param log_density: Логарифм плотности H0 в точках.
    :return: Оценки, убывающие с ростом правдоподобия H0.
    """
    surprise = -np.asarray(log_density, dtype=np.float64)
    finite = np.isfinite(surprise)
    scores = np.ones_like(surprise)
    if not finite.any():
        return scores
    low, high = surprise[finite].min(), surprise[finite].max()
    span = high - low
    scores[finite] = (surprise[finite] - low) / span if span > 0 else 0.0
    return scores


def ring_normalizer(radius: float = RING_RADIUS, sigma: float = RING_SIGMA) -> float:
    """Z = ∫ exp(-(|x| - r0)²/2σ²) dx по плоскости, в замкнутой форме."""
    return 2.0 * np.pi * (sigma ** 2 * np.exp(-radius ** 2 / (2.0 * sigma ** 2))
                          + radius * sigma * np.sqrt(2.0 * np.pi) * norm.cdf(radius / sigma))


def ring_radii(rng: np.random.Generator, count: int, radius: float = RING_RADIUS,
               sigma: float = RING_SIGMA) -> np.ndarray:
    """
    Радиусы кольца с плотностью ∝ r·exp(-(r - r0)²/2σ²) на r > 0.

    Выборка с отклонением: предложение ∝ (r0 + |r - r0|)·exp(-(r - r0)²/2σ²), то есть смесь
    N(r0, σ) и r0 ± Rayleigh(σ); точка принимается с вероятностью r / (r0 + |r - r0|).
    """
    gaussian_weight = radius * sigma * np.sqrt(2.0 * np.pi)
    gaussian_share = gaussian_weight / (gaussian_weight + 2.0 * sigma ** 2)
    accepted = []
    remaining = count
    while remaining > 0:
        size = 2 * remaining + 16
        sign = rng.choice([-1.0, 1.0], size=size)
        proposal = np.where(rng.random(size) < gaussian_share,
                            rng.normal(radius, sigma, size=size),
                            radius + sign * rng.rayleigh(sigma, size=size))
        envelope = radius + np.abs(proposal - radius)
        keep = proposal[rng.random(size) * envelope < proposal]
        accepted.append(keep[:remaining])
        remaining -= accepted[-1].size
    return np.concatenate(accepted) if accepted else np.empty(0)


def toy_sample(toy: ToyDensity, rng: np.random.Generator, count: int) -> np.ndarray:
    """Выборка из игрушечной плотности H0 на плоскости, форма (count, 2)."""
    toy = ToyDensity(toy)
    if toy is ToyDensity.GAUSS:
        return rng.standard_normal((count, 2))
    if toy is ToyDensity.GAUSS_MIXTURE:
        component = rng.integers(0, len(MIXTURE_MEANS), size=count)
        return MIXTURE_MEANS[component] + MIXTURE_SIGMA * rng.standard_normal((count, 2))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=count)
    radius = ring_radii(rng, count)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def toy_log_pdf(toy: ToyDensity, x: np.ndarray) -> np.ndarray:
    """Логарифм аналитической плотности p(x|H0) игрушечного закона."""
    toy = ToyDensity(toy)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if toy is ToyDensity.GAUSS:
        return np.atleast_1d(multivariate_normal(mean=np.zeros(2)).logpdf(x)).reshape(-1)
    if toy is ToyDensity.GAUSS_MIXTURE:
        parts = [np.atleast_1d(multivariate_normal(mean=mean, cov=MIXTURE_SIGMA ** 2).logpdf(x)).reshape(-1)
                 for mean in MIXTURE_MEANS]
        return logsumexp(parts, axis=0) - np.log(len(MIXTURE_MEANS))
    # Плотность зависит только от |x| и обращается в exp(-r0²/2σ²)/Z в центре кольца
    radius = np.hypot(x[:, 0], x[:, 1])
    return -(radius - RING_RADIUS) ** 2 / (2.0 * RING_SIGMA ** 2) - np.log(ring_normalizer())


def toy_pdf(toy: ToyDensity, x: np.ndarray) -> np.ndarray:
    """Аналитическая плотность p(x|H0) игрушечного закона."""
    return np.exp(toy_log_pdf(toy, x))


def attack_sample(rng: np.random.Generator, count: int, box: float = TOY_BOX) -> np.ndarray:
    """Искусственная атака H1*: равномерно на квадрате [-box, box]²."""
    return rng.uniform(-box, box, size=(count, 2))


def attack_pdf(x: np.ndarray, box: float = TOY_BOX) -> np.ndarray:
    x = np.atleast_2d(x)
    inside = np.all(np.abs(x) <= box, axis=1)
    return inside / (2.0 * box) ** 2


def likelihood_ratio_scores(toy: ToyDensity, x: np.ndarray, box: float = TOY_BOX) -> np.ndarray:
    """Апостериорная вероятность атаки p1/(p0 + p1) при равных априорных: монотонна по LR = p1/p0."""
    p0, p1 = toy_pdf(toy, x), attack_pdf(x, box)
    total = p0 + p1
    return np.divide(p1, total, out=np.zeros_like(total), where=total > 0)


def evaluation_grid(half_width: float = TOY_GRID_HALF_WIDTH, points: int = TOY_GRID_POINTS) -> np.ndarray:
    axis = np.linspace(-half_width, half_width, points)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])
