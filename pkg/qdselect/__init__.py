"""
qdselect is an open-source Python library for selecting subsets of
instruction tuning datasets that trade off data quality against
diversity.
"""

from .config import *
from .dataset import *
from .facility_location import *
from .metrics import *
from .presets import *
from .selectors import *
from .similarity import *
from .variants import *
