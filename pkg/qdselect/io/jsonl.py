"""JSON lines dataset files and selection result files.

This module reads and writes the two text formats of the package.

A dataset file holds one JSON object per line::

    {"id": "r1", "quality": 4.5, "text": "...", "embedding": [0.1, ...]}

``id`` (string) and ``quality`` (number) are required, ``text`` and
``embedding`` are optional. Either every record has an inline embedding
or none has, in which case the embeddings come from a separate QDITEMB1
file (see :mod:`qdselect.io.binary`). Blank lines are skipped; line
numbers in error messages count them.

A result file holds a single JSON object describing a
:class:`~qdselect.config.SelectionResult`.

Functions
---------
read_records
    Parse and validate the records of a dataset file.
load_jsonl
    Load a dataset file, and optionally its embedding file, as a
    :class:`~qdselect.dataset.Dataset`.
save_jsonl
    Write a dataset with inline embeddings.
write_result, read_result
    Write and read selection result files.
"""

import json
import logging
import math
from typing import Any, Dict, List, Optional, Tuple
import warnings

import numpy as np

from ..config import SelectionConfig, SelectionResult
from ..dataset import Dataset
from .binary import load_embeddings_bin
from .helpers import DatasetFormatError, atomic_write

__all__ = ["read_records", "load_jsonl", "save_jsonl", "write_result",
           "read_result"]

logger = logging.getLogger(__name__)

Record = Dict[str, Any]


def _is_number(value: Any) -> bool:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        return False
    try:
        return math.isfinite(value)
    except OverflowError:  # integers beyond the float range
        return False


class RecordValidator:
    """Check the records of a dataset file line by line.

    Parameters
    ----------
    filepath
        Path of the file, used in error messages.

    Attributes
    ----------
    records: list of dict
        The validated records in file order.
    dim: int or None
        Embedding length, once the first inline embedding is seen.
    """

    def __init__(self, filepath: str) -> None:
        self.filepath = filepath
        self.records = []
        self.dim = None
        self._ids = set()
        self._has_embedding = None

    @staticmethod
    def error(message: str, line_number: int, line: str) -> None:
        """Raise an error reporting the line number and line contents."""
        if len(line) > 60:
            line = "{0:.57s}...".format(line)
        raise DatasetFormatError('{0} on line {1}: "{2}"'.format(
            message, line_number, line))

    def add_line(self, line_number: int, line: str) -> None:
        """Validate one line and append its record."""
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            self.error("Malformed JSON", line_number, line)
        if not isinstance(record, dict):
            self.error("Record is not a JSON object", line_number, line)

        for key, is_valid in [("id", lambda value: isinstance(value, str)),
                              ("quality", _is_number)]:
            if key not in record:
                self.error("Missing {0!r}".format(key), line_number, line)
            if not is_valid(record[key]):
                self.error("Invalid {0!r}".format(key), line_number, line)
        if not isinstance(record.get("text", ""), str):
            self.error("Invalid 'text'", line_number, line)
        if record["id"] in self._ids:
            self.error("Duplicate id {0!r}".format(record["id"]),
                       line_number, line)
        self._ids.add(record["id"])

        has_embedding = "embedding" in record
        if self._has_embedding is None:
            self._has_embedding = has_embedding
        elif has_embedding != self._has_embedding:
            self.error("Mixed records with and without embeddings",
                       line_number, line)
        if has_embedding:
            self._check_embedding(record["embedding"], line_number, line)

        self.records.append({"id": record["id"],
                             "quality": record["quality"],
                             "text": record.get("text", ""),
                             "embedding": record.get("embedding")})

    def _check_embedding(self, embedding: Any, line_number: int,
                         line: str) -> None:
        if (not isinstance(embedding, list) or not embedding or
                not all(_is_number(value) for value in embedding)):
            self.error("Invalid 'embedding'", line_number, line)
        if self.dim is None:
            self.dim = len(embedding)
        elif len(embedding) != self.dim:
            self.error("Embedding dimension {0} differs from {1}".format(
                len(embedding), self.dim), line_number, line)
        if not any(embedding):
            self.error("Degenerate (all zero) embedding", line_number, line)


def read_records(filepath: str) -> List[Record]:
    """Parse and validate the records of a dataset file.

    Parameters
    ----------
    filepath
        Path to a JSON lines dataset file.

    Returns
    -------
    list of dict
        One dict per record, in file order, with keys ``id``,
        ``quality``, ``text`` and ``embedding`` (None when absent).

    Raises
    ------
    DatasetFormatError:
        If a line is not valid JSON, lacks ``id`` or ``quality``, repeats
        an id, or breaks the embedding rules; the message names the line.
    """
    if not filepath.lower().endswith(".jsonl"):
        warnings.warn("No .jsonl file extension detected. Assuming the file "
                      "is JSON lines and continuing.", UserWarning)
    validator = RecordValidator(filepath)
    with open(filepath, "rb") as jsonl_file:
        for line_number, raw_line in enumerate(jsonl_file, start=1):
            try:
                line = raw_line.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError:
                validator.error("Invalid UTF-8", line_number,
                                raw_line.decode("utf-8", "replace").rstrip())
            if line.strip():
                validator.add_line(line_number, line)
    if not validator.records:
        raise DatasetFormatError('No records found on line 1: "{0}"'.format(
            filepath))
    return validator.records


def load_jsonl(filepath: str,
               embeddings_path: Optional[str] = None
               ) -> Dataset:
    """Load a dataset file as a :class:`~qdselect.dataset.Dataset`.

    Parameters
    ----------
    filepath
        Path to a JSON lines dataset file.
    embeddings_path
        Path to a QDITEMB1 embedding file with one row per record. Must
        be given exactly when the records have no inline embeddings.

    Returns
    -------
    Dataset
        Records in file order, with qualities normalized and embeddings
        unit-normalized.

    Raises
    ------
    DatasetFormatError:
        If either file is malformed, or the embedding source is missing
        or ambiguous.

    Examples
    --------
    >>> from qdselect.io import load_jsonl
    >>> dataset = load_jsonl("instructions.jsonl")
    >>> dataset.n, dataset.dim
    (3, 4)
    """
    records = read_records(filepath)
    if embeddings_path is None:
        if records[0]["embedding"] is None:
            raise DatasetFormatError(
                "Records have no inline embeddings and no embedding file was "
                "given on line 1 of {0!r}".format(filepath))
        embeddings = np.array([record["embedding"] for record in records],
                              dtype=np.float64)
    else:
        if records[0]["embedding"] is not None:
            raise DatasetFormatError(
                "Records have inline embeddings and an embedding file was "
                "also given on line 1 of {0!r}".format(filepath))
        embeddings = load_embeddings_bin(embeddings_path, len(records))
    dataset = Dataset([record["id"] for record in records],
                      [record["quality"] for record in records],
                      embeddings,
                      [record["text"] for record in records])
    logger.info("Loaded %d records from %s", dataset.n, filepath)
    return dataset


def save_jsonl(dataset: Dataset, filepath: str) -> None:
    """Write a dataset with inline embeddings, atomically.

    Raw qualities and embeddings are written, so loading the file gives
    back an identical dataset.
    """
    with atomic_write(filepath) as jsonl_file:
        for point in dataset.points:
            record = {"id": point.id, "quality": point.quality,
                      "text": point.text,
                      "embedding": point.embedding.tolist()}
            jsonl_file.write(json.dumps(record) + "\n")
    logger.info("Wrote %d records to %s", dataset.n, filepath)


def write_result(result: SelectionResult,
                 dataset: Dataset,
                 filepath: str
                 ) -> None:
    """Write a selection result as a single JSON object, atomically.

    Keys are written in a fixed order: ``selected_ids``,
    ``selected_indices``, the configuration (``alpha``, ``algorithm``,
    ``k``, ``seed`` and whichever of ``epsilon``, ``tau`` and
    ``n_clusters`` the algorithm uses), ``truncated``, ``diversity``,
    ``mean_quality`` and ``objective_trace``.

    Raises
    ------
    OSError:
        If `filepath` cannot be written.
    """
    content = {"selected_ids": [dataset.ids[index]
                                for index in result.selected],
               "selected_indices": list(result.selected)}
    content.update(result.config.to_dict())
    content.update({"truncated": result.truncated,
                    "diversity": result.diversity,
                    "mean_quality": result.mean_quality,
                    "objective_trace": list(result.objective_trace)})
    with atomic_write(filepath) as json_file:
        json.dump(content, json_file, indent=2)
        json_file.write("\n")
    logger.info("Wrote %d selected records to %s", len(result), filepath)


def _result_location(filepath: str) -> str:
    return "on line 1: {0!r}".format(filepath)


def read_result(filepath: str,
                dataset: Optional[Dataset] = None
                ) -> Tuple[SelectionResult, List[str]]:
    """Read a result file written by :func:`write_result`.

    Parameters
    ----------
    filepath
        Path to the result file.
    dataset
        When given, the recorded ids must match the ids of `dataset` at
        the recorded indices.

    Returns
    -------
    result: SelectionResult
    selected_ids: list of str

    Raises
    ------
    DatasetFormatError:
        If the file is not a valid result file or does not match
        `dataset`.
    """
    with open(filepath, "r", encoding="utf-8") as json_file:
        try:
            content = json.load(json_file)
        except json.JSONDecodeError as error:
            raise DatasetFormatError('Malformed JSON on line {0}: "{1}"'.format(
                error.lineno, filepath))
    try:
        params = {"alpha": content["alpha"], "k_select": content["k"],
                  "algorithm": content["algorithm"], "seed": content["seed"]}
        params.update({key: content[key] for key
                       in ("epsilon", "tau", "n_clusters") if key in content})
        result = SelectionResult(
            tuple(content["selected_indices"]),
            tuple(content["objective_trace"]), content["diversity"],
            content["mean_quality"], SelectionConfig(**params),
            content["truncated"])
        selected_ids = list(content["selected_ids"])
    except KeyError as error:
        raise DatasetFormatError("Missing {0} {1}".format(
            error, _result_location(filepath)))
    except (TypeError, ValueError) as error:
        raise DatasetFormatError("Invalid result ({0}) {1}".format(
            error, _result_location(filepath)))

    if len(selected_ids) != len(result.selected):
        raise DatasetFormatError("Mismatched selected_ids and "
                                 "selected_indices {0}".format(
                                     _result_location(filepath)))
    if dataset is not None:
        try:
            dataset.check_indices(result.selected)
        except (IndexError, ValueError) as error:
            raise DatasetFormatError("{0} {1}".format(
                error, _result_location(filepath)))
        if [dataset.ids[index] for index in result.selected] != selected_ids:
            raise DatasetFormatError("Selected ids do not match the dataset "
                                     "{0}".format(_result_location(filepath)))
    return result, selected_ids
