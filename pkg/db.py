import csv
import io
import logging
import os
import struct
import tempfile
import zlib
from enum import Enum
from pathlib import Path

import numpy as np
from dotenv import dotenv_values

from config import CHECKPOINT_MAGIC, DATASET_MAGIC, FORMAT_VERSION, RECORDING_MAGIC, TOOL_VERSION
from exceptions import ArtifactIOError, CorruptDatasetError, JamwatchError
from models import (DetectionReport, EquivalenceReport, IQRecording, LabeledDataset, RasterSpec, RunManifest,
                    SimConfig, TrainHistory)
from neural.architectures import SequentialModel, build_model
from states import Architecture, RasterMode, Scenario, Split

# Слой хранения: бинарные записи, наборы данных, чекпоинты, CSV-отчёты и манифесты.
# Все числа пишутся в порядке little-endian.

HEADER = struct.Struct("<14sH")
RECORDING_META = struct.Struct("<QBQ")
SPEC_RECORD = struct.Struct("<IIddB")
DATASET_META = struct.Struct("<IQ")
CHECKPOINT_META = struct.Struct("<BII")
CRC = struct.Struct("<I")


def _item_dtype(height: int, width: int) -> np.dtype:
    return np.dtype([
        ("label", "u1"), ("case", "u1"), ("split", "u1"),
        ("n_source", "<u4"), ("n_dropped", "<u4"),
        ("pixels", "<f4", (height, width)),
    ])


def atomic_write(path, payload: bytes) -> Path:
    """
    Записывает байты во временный файл рядом с целевым и атомарно переименовывает его.

    :raises ArtifactIOError: при ошибке ввода-вывода.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise ArtifactIOError(str(path), f"не удалось записать файл: {e}") from e
    logging.info(f"Записан файл {path} ({len(payload)} байт)")
    return path


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(str(path), f"не удалось прочитать файл: {e}") from e


def _check_header(data: bytes, magic: bytes, path):
    if len(data) < HEADER.size:
        raise CorruptDatasetError(f"{path}: файл короче заголовка")
    found_magic, version = HEADER.unpack_from(data, 0)
    if found_magic != magic:
        raise CorruptDatasetError(f"{path}: неверная сигнатура {found_magic!r}")
    if version != FORMAT_VERSION:
        raise CorruptDatasetError(f"{path}: неподдерживаемая версия формата {version}")


def _check_crc(data: bytes, path):
    if len(data) < HEADER.size + CRC.size:
        raise CorruptDatasetError(f"{path}: файл обрезан")
    (stored,) = CRC.unpack_from(data, len(data) - CRC.size)
    if zlib.crc32(data[:-CRC.size]) != stored:
        raise CorruptDatasetError(f"{path}: контрольная сумма не совпадает")


# --- Записи IQ ---

def save_recording(recording: IQRecording, path) -> Path:
    """Сохраняет запись: заголовок, u64 число отсчётов, u8 сценарий, u64 сид, float32 I/Q попеременно."""
    iq = np.empty((len(recording), 2), dtype="<f4")
    iq[:, 0] = recording.samples.real
    iq[:, 1] = recording.samples.imag
    payload = (HEADER.pack(RECORDING_MAGIC, FORMAT_VERSION)
               + RECORDING_META.pack(len(recording), int(recording.scenario), recording.seed_used)
               + iq.tobytes())
    return atomic_write(path, payload)


def load_recording(path) -> IQRecording:
    """
    :raises CorruptDatasetError: при неверном заголовке или обрезанном файле.
    """
    data = _read_bytes(path)
    _check_header(data, RECORDING_MAGIC, path)
    offset = HEADER.size
    if len(data) < offset + RECORDING_META.size:
        raise CorruptDatasetError(f"{path}: файл обрезан")
    count, scenario, seed = RECORDING_META.unpack_from(data, offset)
    offset += RECORDING_META.size
    if len(data) != offset + count * 8:
        raise CorruptDatasetError(f"{path}: ожидалось {count} отсчётов, размер файла не совпадает")
    if scenario >= len(Scenario):
        raise CorruptDatasetError(f"{path}: неизвестный сценарий {scenario}")
    iq = np.frombuffer(data, dtype="<f4", offset=offset).reshape(count, 2).astype(np.float64)
    return IQRecording(samples=iq[:, 0] + 1j * iq[:, 1], scenario=Scenario(scenario), seed_used=seed)


# --- Наборы данных ---

def dataset_to_bytes(dataset: LabeledDataset) -> bytes:
    dataset.validate_invariants()
    spec = dataset.spec
    items = np.zeros(len(dataset), dtype=_item_dtype(spec.height, spec.width))
    items["label"] = dataset.labels
    items["case"] = dataset.cases
    items["split"] = dataset.splits
    items["n_source"] = dataset.n_source
    items["n_dropped"] = dataset.n_dropped
    items["pixels"] = dataset.pixels
    body = (HEADER.pack(DATASET_MAGIC, FORMAT_VERSION)
            + SPEC_RECORD.pack(spec.height, spec.width, spec.axis_min, spec.axis_max, int(spec.mode))
            + DATASET_META.pack(dataset.n_per_bitmap, len(dataset))
            + items.tobytes())
    return body + CRC.pack(zlib.crc32(body))


def save_dataset(dataset: LabeledDataset, path) -> Path:
    """
    Сохраняет набор без потерь.

    Формат: заголовок, запись RasterSpec, u32 n_per_bitmap, u64 число элементов, затем по элементу:
    u8 метка, u8 сценарий, u8 часть выборки, u32 n_source_samples, u32 n_dropped, H·W float32;
    в конце CRC32 всех предыдущих байт.
    """
    return atomic_write(path, dataset_to_bytes(dataset))


def load_dataset(path) -> LabeledDataset:
    """
    Загружает набор и проверяет его целостность и гигиену разбиения.

    :raises CorruptDatasetError: неверная сигнатура или версия, обрезанный файл, несовпадение CRC,
        недопустимые теги или нарушение разбиения.
    """
    data = _read_bytes(path)
    _check_header(data, DATASET_MAGIC, path)
    offset = HEADER.size
    if len(data) < offset + SPEC_RECORD.size + DATASET_META.size + CRC.size:
        raise CorruptDatasetError(f"{path}: файл обрезан")
    height, width, axis_min, axis_max, mode = SPEC_RECORD.unpack_from(data, offset)
    offset += SPEC_RECORD.size
    n_per_bitmap, count = DATASET_META.unpack_from(data, offset)
    offset += DATASET_META.size
    dtype = _item_dtype(height, width)
    if len(data) != offset + count * dtype.itemsize + CRC.size:
        raise CorruptDatasetError(f"{path}: ожидалось {count} элементов, размер файла не совпадает")
    _check_crc(data, path)
    if mode >= len(RasterMode):
        raise CorruptDatasetError(f"{path}: неизвестный режим растеризации {mode}")

    items = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    if np.any(items["case"] >= len(Scenario)) or np.any(items["split"] >= len(Split)) or np.any(items["label"] > 1):
        raise CorruptDatasetError(f"{path}: недопустимые теги элементов")
    try:
        spec = RasterSpec(height=height, width=width, axis_min=axis_min, axis_max=axis_max, mode=RasterMode(mode))
        dataset = LabeledDataset(
            pixels=items["pixels"].astype(np.float32),
            labels=items["label"].copy(),
            cases=items["case"].copy(),
            splits=items["split"].copy(),
            n_source=items["n_source"].astype(np.uint32),
            n_dropped=items["n_dropped"].astype(np.uint32),
            spec=spec,
            n_per_bitmap=n_per_bitmap,
        )
        dataset.validate_invariants()
    except JamwatchError as e:
        raise CorruptDatasetError(f"{path}: {e}") from e
    logging.info(f"Загружен набор {path}: {count} элементов, {height}x{width}, n={n_per_bitmap}")
    return dataset


# --- Чекпоинты ---

def save_checkpoint(model: SequentialModel, path) -> Path:
    """Сохраняет архитектуру, разрешение и блоки параметров в порядке объявления (float32), затем CRC32."""
    parameters = model.parameters()
    chunks = [HEADER.pack(CHECKPOINT_MAGIC, FORMAT_VERSION),
              CHECKPOINT_META.pack(int(model.architecture), model.resolution, len(parameters))]
    for _, value in parameters:
        chunks.append(struct.pack(f"<B{value.ndim}I", value.ndim, *value.shape))
        chunks.append(np.ascontiguousarray(value, dtype="<f4").tobytes())
    body = b"".join(chunks)
    return atomic_write(path, body + CRC.pack(zlib.crc32(body)))


def load_checkpoint(path, dtype=np.float32) -> SequentialModel:
    """
    Восстанавливает модель из чекпоинта.

    :raises CorruptDatasetError: при повреждённом файле.
    :raises ShapeError: если блоки не совпадают с архитектурой.
    """
    data = _read_bytes(path)
    _check_header(data, CHECKPOINT_MAGIC, path)
    _check_crc(data, path)
    end = len(data) - CRC.size
    offset = HEADER.size
    if end < offset + CHECKPOINT_META.size:
        raise CorruptDatasetError(f"{path}: файл обрезан")
    architecture, resolution, n_blobs = CHECKPOINT_META.unpack_from(data, offset)
    offset += CHECKPOINT_META.size
    if architecture >= len(Architecture):
        raise CorruptDatasetError(f"{path}: неизвестная архитектура {architecture}")
    blobs = []
    for _ in range(n_blobs):
        if offset >= end:
            raise CorruptDatasetError(f"{path}: файл обрезан")
        ndim = data[offset]
        dims = struct.unpack_from(f"<{ndim}I", data, offset + 1)
        offset += 1 + 4 * ndim
        size = int(np.prod(dims)) * 4
        if offset + size > end:
            raise CorruptDatasetError(f"{path}: файл обрезан")
        blobs.append(np.frombuffer(data, dtype="<f4", count=size // 4, offset=offset).reshape(dims))
        offset += size
    if offset != end:
        raise CorruptDatasetError(f"{path}: лишние байты после параметров")
    model = build_model(Architecture(architecture), resolution, dtype=dtype)
    model.load_parameters(blobs)
    logging.info(f"Загружен чекпоинт {path}: {model.architecture.name}, {model.parameter_count()} параметров")
    return model


def checkpoint_resolution(path) -> tuple[Architecture, int]:
    """Читает только архитектуру и разрешение из заголовка чекпоинта."""
    data = _read_bytes(path)
    _check_header(data, CHECKPOINT_MAGIC, path)
    if len(data) < HEADER.size + CHECKPOINT_META.size:
        raise CorruptDatasetError(f"{path}: файл обрезан")
    architecture, resolution, _ = CHECKPOINT_META.unpack_from(data, HEADER.size)
    if architecture >= len(Architecture):
        raise CorruptDatasetError(f"{path}: неизвестная архитектура {architecture}")
    return Architecture(architecture), resolution


# --- CSV ---

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: list[str], rows: list[list]) -> Path:
    """Пишет CSV с заголовком и десятичной точкой."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(value) for value in row])
    return atomic_write(path, buffer.getvalue().encode("utf-8"))


def read_csv(path) -> list[dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            return list(csv.DictReader(handle))
    except OSError as e:
        raise ArtifactIOError(str(path), f"не удалось прочитать CSV: {e}") from e


def write_history_csv(history: TrainHistory, path) -> Path:
    rows = [[epoch, train, val] for epoch, (train, val) in
            enumerate(zip(history.train_loss, history.val_loss), start=1)]
    return write_csv(path, ["epoch", "train_loss", "val_loss"], rows)


REPORT_HEADER = ["row", "tau", "fa", "md", "tau_fa", "tau_md", "separation", "auc"]


def write_report_csv(report: DetectionReport, path) -> Path:
    """Строка на каждый порог (tau, fa, md) и итоговая строка (tau_fa, tau_md, separation, auc)."""
    rows = [["curve", tau, fa, md, None, None, None, None]
            for tau, fa, md in zip(report.thresholds, report.fa_curve, report.md_curve)]
    rows.append(["summary", None, None, None, report.tau_fa, report.tau_md, report.separation, report.auc])
    return write_csv(path, REPORT_HEADER, rows)


COMPARISON_HEADER = ["model", "kind", "separation", "auc", "tau_fa", "tau_md", "gain"]


def write_comparison_csv(rows: list[list], path) -> Path:
    """Сводка сравнения моделей: строки (model, kind, separation, auc, tau_fa, tau_md, gain)."""
    return write_csv(path, COMPARISON_HEADER, rows)


EQUIVALENCE_HEADER = ["toy", "n_train", "spearman", "auc_nn", "auc_glrt", "auc_gap", "auc_lr", "auc_kde",
                      "final_train_loss", "final_val_loss", "passed", "reason"]


def write_equivalence_csv(report: EquivalenceReport, path) -> Path:
    row = [getattr(report, name) for name in EQUIVALENCE_HEADER]
    row[0] = report.toy.value
    row[10] = int(report.passed)
    return write_csv(path, EQUIVALENCE_HEADER, [row])


# --- Манифесты key=value ---

def _manifest_text(pairs: list[tuple[str, object]]) -> bytes:
    return "".join(f"{key}={_fmt(value)}\n" for key, value in pairs).encode("utf-8")


def write_manifest(manifest: RunManifest, path) -> Path:
    """
    Пишет паспорт запуска; все перечисленные артефакты должны существовать.

    :raises ArtifactIOError: если какой-то артефакт отсутствует.
    """
    for artifact in manifest.artifacts:
        if not Path(artifact).exists():
            raise ArtifactIOError(artifact, "артефакт из манифеста не существует")
    pairs = [("command", manifest.command), ("tool_version", manifest.tool_version),
             ("duration_s", round(manifest.duration_s, 3))]
    pairs += [(f"config.{key}", value) for key, value in sorted(manifest.config.items())]
    pairs += [(f"seed.{key}", value) for key, value in sorted(manifest.seeds.items())]
    pairs += [(f"artifact.{i}", value) for i, value in enumerate(manifest.artifacts)]
    return atomic_write(path, _manifest_text(pairs))


def read_manifest(path) -> dict[str, str]:
    """Читает файл key=value (манифест или файл конфигурации)."""
    if not Path(path).is_file():
        raise ArtifactIOError(str(path), "файл не найден")
    return {key: value or "" for key, value in dotenv_values(path).items()}


def manifest_artifacts(values: dict[str, str]) -> list[str]:
    keys = sorted((k for k in values if k.startswith("artifact.")), key=lambda k: int(k.split(".", 1)[1]))
    return [values[k] for k in keys]


def write_dataset_manifest(dataset: LabeledDataset, cfg: SimConfig, scale: float, path) -> Path:
    """Провенанс набора: параметры симулятора, RasterSpec, сид и число элементов по слоям."""
    pairs = [("tool_version", TOOL_VERSION), ("scale", scale), ("n_per_bitmap", dataset.n_per_bitmap),
             ("items", len(dataset))]
    pairs += [(f"sim.{key}", value) for key, value in cfg.model_dump().items()]
    pairs += [(f"raster.{key}", value) for key, value in dataset.spec.model_dump(mode="json").items()]
    pairs += [(f"count.{split.name.lower()}.{case.name.lower()}", count)
              for (split, case), count in sorted(dataset.stratum_counts().items())]
    return atomic_write(path, _manifest_text(pairs))

