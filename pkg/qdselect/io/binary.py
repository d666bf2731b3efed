"""Reading and writing embedding matrices in the QDITEMB1 format.

A file is a 16-byte header followed by the matrix as row-major
little-endian float32 values::

    offset  size  field
    0       8     magic, ASCII "QDITEMB1"
    8       4     n, uint32 little-endian, number of rows
    12      4     dim, uint32 little-endian, row length
    16      4 n dim  row i is the embedding of record i

The file length is exactly ``16 + 4 n dim`` bytes.
"""

import logging
import os
import struct
from typing import NamedTuple, Optional

import numpy as np

from .helpers import DatasetFormatError, atomic_write

__all__ = ["EmbeddingFileHeader", "read_embeddings_bin", "load_embeddings_bin",
           "write_embeddings_bin", "MAGIC"]

logger = logging.getLogger(__name__)

MAGIC = b"QDITEMB1"
HEADER = struct.Struct("<8sII")
FLOAT32 = np.dtype("<f4")


class EmbeddingFileHeader(NamedTuple):
    """The header of an embedding file."""
    magic: bytes
    n: int
    dim: int

    @property
    def file_size(self) -> int:
        """Expected total length of the file in bytes."""
        return HEADER.size + self.n * self.dim * FLOAT32.itemsize

    def pack(self) -> bytes:
        return HEADER.pack(self.magic, self.n, self.dim)

    @classmethod
    def unpack(cls, raw: bytes, filepath: str = "") -> "EmbeddingFileHeader":
        """Parse and check a 16-byte header.

        Raises
        ------
        DatasetFormatError:
            If the header is short or the magic is wrong.
        """
        if len(raw) < HEADER.size:
            raise DatasetFormatError(
                "Truncated header in {0!r}: {1} of {2} bytes at byte offset "
                "{1}".format(filepath, len(raw), HEADER.size))
        header = cls(*HEADER.unpack(raw[:HEADER.size]))
        if header.magic != MAGIC:
            raise DatasetFormatError(
                "{0!r} is not a QDITEMB1 file (magic {1!r} at byte offset "
                "0)".format(filepath, header.magic))
        return header


def read_embeddings_bin(filepath: str,
                        expected_n: Optional[int] = None
                        ) -> np.ndarray:
    """Read the raw float32 matrix stored in an embedding file.

    Parameters
    ----------
    filepath
        Path to a QDITEMB1 file.
    expected_n
        Number of rows the caller expects, usually the number of
        records of the paired JSONL file.

    Returns
    -------
    ndarray:
        The n x dim float32 matrix exactly as stored.

    Raises
    ------
    DatasetFormatError:
        If the magic is wrong, the file is truncated or has trailing
        bytes, or the row count differs from `expected_n`.
    """
    file_size = os.path.getsize(filepath)
    with open(filepath, "rb") as bin_file:
        header = EmbeddingFileHeader.unpack(bin_file.read(HEADER.size),
                                            filepath)
        if expected_n is not None and header.n != expected_n:
            raise DatasetFormatError(
                "{0!r} holds {1} embeddings but {2} records were given at "
                "byte offset 8".format(filepath, header.n, expected_n))
        if file_size < header.file_size:
            raise DatasetFormatError(
                "Truncated file {0!r}: expected {1} bytes, found {2} at byte "
                "offset {2}".format(filepath, header.file_size, file_size))
        if file_size > header.file_size:
            raise DatasetFormatError(
                "Trailing data in {0!r}: expected {1} bytes, found {2} at "
                "byte offset {1}".format(filepath, header.file_size,
                                         file_size))
        matrix = np.fromfile(bin_file, dtype=FLOAT32,
                             count=header.n * header.dim)
    return matrix.reshape(header.n, header.dim)


def load_embeddings_bin(filepath: str,
                        expected_n: Optional[int] = None
                        ) -> np.ndarray:
    """Load an embedding file as a float64 matrix with unit-norm rows.

    Row i pairs with line i of the matching JSONL file. See
    :func:`read_embeddings_bin` for the parameters and errors; in
    addition a row that is all zeros or non-finite raises
    :class:`DatasetFormatError` naming its byte offset.
    """
    raw = read_embeddings_bin(filepath, expected_n)
    matrix = raw.astype(np.float64)
    row_bytes = raw.shape[1] * FLOAT32.itemsize
    norms = np.linalg.norm(matrix, axis=1)
    bad = ~np.isfinite(norms) | (norms == 0)
    if np.any(bad):
        row = int(np.flatnonzero(bad)[0])
        raise DatasetFormatError(
            "Degenerate embedding in row {0} of {1!r} at byte offset "
            "{2}".format(row, filepath, HEADER.size + row * row_bytes))
    logger.info("Loaded %d x %d embeddings from %s", raw.shape[0],
                raw.shape[1], filepath)
    return matrix / norms[:, np.newaxis]


def write_embeddings_bin(filepath: str, embeddings: np.ndarray) -> None:
    """Write an embedding matrix as a QDITEMB1 file, atomically.

    Values are stored as float32.

    Raises
    ------
    ValueError:
        If `embeddings` is not a finite 2D matrix.
    """
    matrix = np.asarray(embeddings)
    if matrix.ndim != 2:
        raise ValueError("Embeddings must be a 2D matrix, got {0} "
                         "dimensions".format(matrix.ndim))
    if not np.all(np.isfinite(matrix)):
        raise ValueError("Embeddings contain non-finite values")
    n, dim = matrix.shape
    header = EmbeddingFileHeader(MAGIC, n, dim)
    with atomic_write(filepath, "wb") as bin_file:
        bin_file.write(header.pack())
        bin_file.write(np.ascontiguousarray(matrix, dtype=FLOAT32).tobytes())
    logger.info("Wrote %d x %d embeddings to %s", n, dim, filepath)
