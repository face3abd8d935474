"""
Dataset MNIST e geração de minibatches
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from network import EmptyDatasetError
from tensor_core import Tensor, substream
from .checksum import file_fingerprint, verify_or_record
from .idx import IMAGES_MAGIC, LABELS_MAGIC, IdxFormatError, read_idx

logger = logging.getLogger(__name__)

NUM_CLASSES = 10

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class DatasetConsistencyError(ValueError):
    """Imagens e rótulos não correspondem"""


@dataclass(eq=False)
class Dataset:
    """
    Conjunto rotulado

    images: (n, 1, 28, 28) em [0,1] menos a média escalar do treino
    labels: inteiros em [0, 10)
    """

    images: Tensor
    labels: np.ndarray
    split: str = "train"
    mean: float = 0.0

    def __post_init__(self) -> None:
        if self.images.shape[0] != self.labels.shape[0]:
            raise DatasetConsistencyError(
                f"{self.images.shape[0]} imagens para {self.labels.shape[0]} rótulos"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= NUM_CLASSES):
            raise DatasetConsistencyError(f"Rótulos fora de [0, {NUM_CLASSES})")
        self.labels = self.labels.astype(np.int64)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, count: int) -> "Dataset":
        """Primeiras count amostras"""
        return Dataset(self.images[:count], self.labels[:count], self.split, self.mean)


def images_to_tensor(pixels: np.ndarray, mean: Optional[float] = None) -> tuple[Tensor, float]:
    """
    Converte bytes (n, 28, 28) em tensor (n, 1, 28, 28) centrado

    Args:
        pixels: uint8
        mean: Média a subtrair (None: média destes pixels escalados)

    Returns:
        Tupla (tensor, média usada)
    """
    scaled = pixels.astype(np.float64) / 255.0
    if mean is None:
        mean = float(scaled.mean()) if scaled.size else 0.0
    return (scaled - mean)[:, None, :, :], mean


def load_idx(
    images_path: Union[str, Path],
    labels_path: Union[str, Path],
    mean: Optional[float] = None,
    split: str = "train",
    ledger_dir: Optional[Path] = None,
) -> Dataset:
    """
    Carrega par de arquivos IDX

    Args:
        images_path: Arquivo de imagens (magic 2051)
        labels_path: Arquivo de rótulos (magic 2049)
        mean: Média do treino (None: calculada aqui)
        split: "train" ou "test"
        ledger_dir: Diretório do checksums.json (None: sem verificação)

    Raises:
        IdxFormatError, IdxLengthError, DatasetConsistencyError, ChecksumMismatchError
    """
    img_magic, pixels, img_raw = read_idx(images_path)
    if img_magic != IMAGES_MAGIC or pixels.ndim != 3:
        raise IdxFormatError(f"{images_path}: magic {img_magic}, esperado {IMAGES_MAGIC}")
    lbl_magic, labels, lbl_raw = read_idx(labels_path)
    if lbl_magic != LABELS_MAGIC or labels.ndim != 1:
        raise IdxFormatError(f"{labels_path}: magic {lbl_magic}, esperado {LABELS_MAGIC}")

    if pixels.shape[0] != labels.shape[0]:
        raise DatasetConsistencyError(
            f"{pixels.shape[0]} imagens e {labels.shape[0]} rótulos"
        )

    if ledger_dir is not None:
        verify_or_record(ledger_dir, Path(images_path).name, file_fingerprint(img_raw, pixels))
        verify_or_record(ledger_dir, Path(labels_path).name, file_fingerprint(lbl_raw, labels))

    images, mean = images_to_tensor(pixels, mean)
    logger.info("%s: %d amostras, média %.6f", split, len(labels), mean)
    return Dataset(images, labels.astype(np.int64), split, mean)


def _find(data_dir: Path, stem: str) -> Path:
    for candidate in (stem, f"{stem}.gz"):
        path = data_dir / candidate
        if path.exists():
            return path
    raise FileNotFoundError(f"{stem}[.gz] não encontrado em {data_dir}")


def load_mnist(data_dir: Union[str, Path], verify: bool = True) -> Tuple[Dataset, Dataset]:
    """
    Carrega treino e teste; o teste usa a média do treino

    Returns:
        Tupla (train, test)
    """
    data_dir = Path(data_dir)
    ledger = data_dir if verify else None
    train_files = [_find(data_dir, name) for name in MNIST_FILES["train"]]
    test_files = [_find(data_dir, name) for name in MNIST_FILES["test"]]
    train = load_idx(*train_files, split="train", ledger_dir=ledger)
    test = load_idx(*test_files, mean=train.mean, split="test", ledger_dir=ledger)
    return train, test


def batches(
    dataset: Dataset,
    batch_size: int,
    seed: int,
    epoch: int = 0,
    stream: str = "shuffle",
) -> Iterator[Tuple[Tensor, np.ndarray]]:
    """
    Uma época de minibatches embaralhados

    A permutação vem do subfluxo (stream, epoch); o último batch
    pode ser menor.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size deve ser >= 1: {batch_size}")
    order = substream(seed, stream, epoch).permutation(len(dataset))
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        yield dataset.images[idx], dataset.labels[idx]


class BatchStream:
    """Fluxo infinito de minibatches, época após época"""

    def __init__(
        self,
        dataset: Dataset,
        batch_size: int,
        seed: int,
        first_epoch: int = 0,
        stream: str = "shuffle",
    ):
        if len(dataset) == 0:
            raise EmptyDatasetError("Fluxo de batches sobre conjunto vazio")
        self.dataset = dataset
        self.batch_size = batch_size
        self.seed = seed
        self.stream = stream
        self.epoch = first_epoch
        self._current = batches(dataset, batch_size, seed, self.epoch, stream)

    @property
    def steps_per_epoch(self) -> int:
        return -(-len(self.dataset) // self.batch_size)

    def __iter__(self) -> "BatchStream":
        return self

    def __next__(self) -> Tuple[Tensor, np.ndarray]:
        try:
            return next(self._current)
        except StopIteration:
            self.epoch += 1
            self._current = batches(self.dataset, self.batch_size, self.seed, self.epoch, self.stream)
            return next(self._current)
