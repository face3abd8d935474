"""
Data IO Module

Ingestão de MNIST no formato IDX (bit a bit, com gzip opcional),
registro de checksums e minibatches embaralhados por seed.
"""

from .idx import (
    IMAGES_MAGIC,
    LABELS_MAGIC,
    IdxFormatError,
    IdxLengthError,
    parse_idx,
    read_idx,
)
from .checksum import ChecksumMismatchError, file_fingerprint, load_ledger, verify_or_record
from .dataset import (
    BatchStream,
    Dataset,
    DatasetConsistencyError,
    MNIST_FILES,
    batches,
    images_to_tensor,
    load_idx,
    load_mnist,
)

__all__ = [
    "IMAGES_MAGIC",
    "LABELS_MAGIC",
    "IdxFormatError",
    "IdxLengthError",
    "parse_idx",
    "read_idx",
    "ChecksumMismatchError",
    "file_fingerprint",
    "load_ledger",
    "verify_or_record",
    "BatchStream",
    "Dataset",
    "DatasetConsistencyError",
    "MNIST_FILES",
    "batches",
    "images_to_tensor",
    "load_idx",
    "load_mnist",
]
