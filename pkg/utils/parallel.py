import logging

from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from config import settings


def worker_count(requested: int | None = None) -> int:
    """
    Число рабочих потоков с учётом ограничения JAMWATCH_THREADS.

    :param requested: Желаемое число потоков или None.
    :return: Не меньше 1 и не больше settings.threads.
    """
    cap = max(1, settings.threads)
    if requested is None:
        return cap
    return max(1, min(requested, cap))


def run_ordered(func, jobs: list, n_workers: int | None = None) -> list:
    """
    Выполняет func(*job) для каждого задания и возвращает результаты в порядке заданий.

    Порядок результатов не зависит от числа потоков, поэтому последующие свёртки детерминированы.

    :param func: Вызываемый объект.
    :param jobs: Список кортежей аргументов.
    :param n_workers: Желаемое число потоков.
    :return: Список результатов.
    """
    workers = worker_count(n_workers)
    if workers == 1 or len(jobs) <= 1:
        return [func(*job) for job in jobs]
    logging.debug(f"Параллельное выполнение {len(jobs)} заданий в {workers} потоках")
    # Лимит BLAS общий для процесса: один на весь пул
    with threadpool_limits(limits=1):
        return Parallel(n_jobs=workers, prefer="threads")(delayed(func)(*job) for job in jobs)
