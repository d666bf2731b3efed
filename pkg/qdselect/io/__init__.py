"""File formats and the embedding service client."""

from .binary import *
from .client import *
from .helpers import *
from .jsonl import *
