"""Format errors and file-writing helpers shared by the io modules."""

from contextlib import contextmanager
import csv
import math
import os
import tempfile
from typing import IO, Iterable, Iterator, TYPE_CHECKING

if TYPE_CHECKING:
    from ..metrics import TradeoffPoint

__all__ = ["DatasetFormatError", "atomic_write", "write_sweep_csv",
           "SWEEP_CSV_HEADER"]

SWEEP_CSV_HEADER = ("alpha", "algorithm", "k", "seed", "diversity",
                    "mean_quality")


class DatasetFormatError(ValueError):
    """Exception for malformed dataset, embedding and result files.

    The message always ends with the location of the problem, a line
    number for text files and a byte offset for binary files.
    """


@contextmanager
def atomic_write(filepath: str, mode: str = "w") -> Iterator[IO]:
    """Open a temporary file that replaces `filepath` on success.

    The temporary file lives in the target directory and is renamed over
    `filepath` only when the block exits without an exception, so a
    failed write never leaves a partial file at `filepath`.

    Parameters
    ----------
    filepath
        Destination path.
    mode
        ``"w"`` for text or ``"wb"`` for binary output.

    Raises
    ------
    OSError:
        If the destination directory is not writable.
    """
    directory = os.path.dirname(os.path.abspath(filepath))
    fd, temp_path = tempfile.mkstemp(
        dir=directory, prefix=".{0}.".format(os.path.basename(filepath)),
        suffix=".tmp")
    try:
        newline = "" if "b" not in mode else None
        with os.fdopen(fd, mode, newline=newline) as temp_file:
            yield temp_file
            temp_file.flush()
            os.fsync(temp_file.fileno())
        os.replace(temp_path, filepath)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise


def _format_number(value: float) -> str:
    """Nine significant digits; NaN becomes an empty cell."""
    if math.isnan(value):
        return ""
    return "{0:.9g}".format(value)


def write_sweep_csv(points: Iterable["TradeoffPoint"], filepath: str) -> None:
    """Write tradeoff points as CSV, one row per point.

    The header is ``alpha,algorithm,k,seed,diversity,mean_quality``;
    reals are written with nine significant digits and the alpha of a
    random baseline row is left empty.
    """
    with atomic_write(filepath) as csv_file:
        writer = csv.writer(csv_file, lineterminator="\n")
        writer.writerow(SWEEP_CSV_HEADER)
        for point in points:
            writer.writerow([_format_number(point.alpha), point.algorithm,
                             point.k_select, point.seed,
                             _format_number(point.diversity),
                             _format_number(point.mean_quality)])
