"""HTTP client for an embedding service.

The service is called with the common embeddings-API JSON shape: a POST
of ``{"model": ..., "input": [texts]}`` with a bearer token, answered by
``{"data": [{"embedding": [...]}, ...]}`` in input order. Texts are sent
in batches, several batches in flight at once, and transient failures
(HTTP 429, HTTP 5xx and timeouts) are retried with jittered exponential
backoff.

The endpoint and key are read from the environment variables
``QDIT_EMBED_URL`` and ``QDIT_EMBED_KEY``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import os
import threading
from typing import Mapping, Optional, Sequence

import httpx
import numpy as np
from tenacity import (RetryCallState, Retrying, retry_if_exception_type,
                      stop_after_attempt, wait_exponential_jitter)

from ..similarity import unit_normalize

__all__ = ["EmbedClientConfig", "EmbeddingClient", "EmbeddingServiceError",
           "TransientServiceError", "MissingEnvironmentError", "embed_texts",
           "ENV_URL", "ENV_KEY"]

logger = logging.getLogger(__name__)

ENV_URL = "QDIT_EMBED_URL"
ENV_KEY = "QDIT_EMBED_KEY"


class MissingEnvironmentError(ValueError):
    """Exception for a required environment variable that is not set."""


class EmbeddingServiceError(RuntimeError):
    """Exception for a failed call to the embedding service.

    Attributes
    ----------
    status: int or None
        HTTP status of the failing response, if there was one.
    offset: int or None
        Position of the first text of the failing batch.
    """

    def __init__(self,
                 message: str,
                 status: Optional[int] = None,
                 offset: Optional[int] = None
                 ) -> None:
        super().__init__(message)
        self.status = status
        self.offset = offset


class TransientServiceError(EmbeddingServiceError):
    """Exception for a failure worth retrying (HTTP 429 or 5xx)."""


@dataclass(frozen=True)
class EmbedClientConfig:
    """Settings of the embedding client

    Parameters
    ----------
    endpoint_url: str
        URL the batches are posted to.
    api_key: str
        Bearer token; never shown in the repr.
    model: str
        Model identifier sent with every request.
    batch_size: int
        Texts per request.
    max_retries: int
        Retries per batch after the first attempt.
    timeout_seconds: float
        Timeout of a single request.
    max_in_flight: int
        Batches requested concurrently.
    backoff_seconds: float
        First retry delay; the delay doubles on every further retry and
        up to the same amount of random jitter is added.
    """
    endpoint_url: str
    api_key: str = field(default="", repr=False)
    model: str = "all-mpnet-base-v2"
    batch_size: int = 64
    max_retries: int = 5
    timeout_seconds: float = 60
    max_in_flight: int = 4
    backoff_seconds: float = 1.0

    def __post_init__(self) -> None:
        if not self.endpoint_url:
            raise ValueError("Invalid endpoint_url: {0!r}".format(
                self.endpoint_url))
        checks = [("batch_size", self.batch_size >= 1),
                  ("max_retries", self.max_retries >= 0),
                  ("timeout_seconds", self.timeout_seconds > 0),
                  ("max_in_flight", self.max_in_flight >= 1),
                  ("backoff_seconds", self.backoff_seconds >= 0)]
        for name, is_valid in checks:
            if not is_valid:
                raise ValueError("Invalid {0}: {1}".format(
                    name, getattr(self, name)))

    @classmethod
    def from_env(cls,
                 environ: Optional[Mapping[str, str]] = None,
                 **settings
                 ) -> "EmbedClientConfig":
        """Create a config with the endpoint and key from the environment.

        Raises
        ------
        MissingEnvironmentError:
            If ``QDIT_EMBED_URL`` or ``QDIT_EMBED_KEY`` is not set.
        """
        environ = os.environ if environ is None else environ
        for name in (ENV_URL, ENV_KEY):
            if not environ.get(name):
                raise MissingEnvironmentError(
                    "Environment variable {0} is not set".format(name))
        return cls(environ[ENV_URL], environ[ENV_KEY], **settings)


class EmbeddingClient:
    """Client computing embeddings through the embedding service.

    Parameters
    ----------
    config
        Client settings.
    transport
        httpx transport to send requests with; the default network
        transport when omitted.

    Attributes
    ----------
    retries: int
        Number of retries performed so far, over all batches.
    requests: int
        Number of requests sent so far, retries included.

    Examples
    --------
    >>> config = EmbedClientConfig.from_env(batch_size=32)
    >>> with EmbeddingClient(config) as client:
    ...     embeddings = client.embed(["first text", "second text"])
    >>> embeddings.shape
    (2, 768)
    """

    def __init__(self,
                 config: EmbedClientConfig,
                 transport: Optional[httpx.BaseTransport] = None
                 ) -> None:
        self.config = config
        self.retries = 0
        self.requests = 0
        self._lock = threading.Lock()
        self._client = httpx.Client(
            transport=transport, timeout=config.timeout_seconds,
            headers={"Authorization": "Bearer {0}".format(config.api_key)})

    def __enter__(self) -> "EmbeddingClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def close(self) -> None:
        self._client.close()

    def _post_batch(self, texts: Sequence[str], offset: int) -> np.ndarray:
        """Send one request; raise TransientServiceError when retryable."""
        with self._lock:
            self.requests += 1
        try:
            response = self._client.post(
                self.config.endpoint_url,
                json={"model": self.config.model, "input": list(texts)})
        except httpx.TimeoutException:
            raise
        except httpx.HTTPError as error:
            raise EmbeddingServiceError(
                "Request for batch at offset {0} failed: {1}".format(
                    offset, error), offset=offset) from error

        status = response.status_code
        if status == 429 or status >= 500:
            raise TransientServiceError(
                "HTTP {0} for batch at offset {1}".format(status, offset),
                status, offset)
        if not 200 <= status < 300:
            raise EmbeddingServiceError(
                "HTTP {0} for batch at offset {1}: {2}".format(
                    status, offset, response.text[:200]), status, offset)

        try:
            embeddings = [item["embedding"] for item in response.json()["data"]]
        except (ValueError, KeyError, TypeError) as error:
            raise EmbeddingServiceError(
                "Malformed response for batch at offset {0}".format(offset),
                status, offset) from error
        if len(embeddings) != len(texts):
            raise EmbeddingServiceError(
                "Response has {0} embeddings for {1} texts in batch at offset "
                "{2}".format(len(embeddings), len(texts), offset),
                status, offset)
        if len({len(embedding) for embedding in embeddings}) != 1:
            raise EmbeddingServiceError(
                "Inconsistent embedding dimensions in batch at offset "
                "{0}".format(offset), status, offset)
        return np.array(embeddings, dtype=np.float64)

    def _log_retry(self, retry_state: RetryCallState) -> None:
        with self._lock:
            self.retries += 1
        logger.warning("Retrying batch at offset %d after attempt %d: %s",
                       retry_state.args[1], retry_state.attempt_number,
                       retry_state.outcome.exception())

    def embed_batch(self, texts: Sequence[str], offset: int = 0) -> np.ndarray:
        """Embed one batch of texts, retrying transient failures.

        Returns
        -------
        ndarray:
            The raw embeddings, one row per text.

        Raises
        ------
        EmbeddingServiceError:
            On a non-transient failure, a malformed response, or when
            the retries are exhausted.
        """
        backoff = self.config.backoff_seconds
        retrying = Retrying(
            stop=stop_after_attempt(self.config.max_retries + 1),
            wait=wait_exponential_jitter(initial=backoff, exp_base=2,
                                         jitter=backoff),
            retry=retry_if_exception_type((TransientServiceError,
                                           httpx.TimeoutException)),
            before_sleep=self._log_retry,
            reraise=True)
        try:
            return retrying(self._post_batch, texts, offset)
        except TransientServiceError as error:
            raise EmbeddingServiceError(
                "Retries exhausted: {0}".format(error), error.status,
                offset) from error
        except httpx.TimeoutException as error:
            raise EmbeddingServiceError(
                "Retries exhausted: request for batch at offset {0} timed "
                "out".format(offset), offset=offset) from error

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Embed texts in batches, preserving their order.

        Returns
        -------
        ndarray:
            A float64 matrix with one unit-norm row per text.

        Raises
        ------
        ValueError:
            If `texts` is empty.
        EmbeddingServiceError:
            If any batch fails or the batches disagree on the dimension.
        """
        texts = list(texts)
        if not texts:
            raise ValueError("No texts to embed")
        size = self.config.batch_size
        offsets = list(range(0, len(texts), size))
        workers = min(self.config.max_in_flight, len(offsets))
        with ThreadPoolExecutor(max_workers=workers) as executor:
            batches = list(executor.map(
                lambda offset: self.embed_batch(texts[offset:offset + size],
                                                offset),
                offsets))

        dim = batches[0].shape[1]
        for offset, batch in zip(offsets, batches):
            if batch.shape[1] != dim:
                raise EmbeddingServiceError(
                    "Embedding dimension {0} of batch at offset {1} differs "
                    "from {2}".format(batch.shape[1], offset, dim),
                    offset=offset)
        try:
            embeddings = unit_normalize(np.vstack(batches))
        except ValueError as error:
            raise EmbeddingServiceError(
                "Service returned an unusable embedding: {0}".format(error))
        logger.info("Embedded %d texts in %d requests (%d retries)",
                    len(texts), self.requests, self.retries)
        return embeddings


def embed_texts(texts: Sequence[str],
                config: EmbedClientConfig,
                transport: Optional[httpx.BaseTransport] = None
                ) -> np.ndarray:
    """Embed texts with a one-off :class:`EmbeddingClient`."""
    with EmbeddingClient(config, transport) as client:
        return client.embed(texts)
