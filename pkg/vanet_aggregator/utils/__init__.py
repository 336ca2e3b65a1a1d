"""
Utility modules for the VANET aggregation toolkit.
"""

from .csv_utils import write_csv
from .db_utils import get_db_session, init_database
from .range_utils import parse_int_list, parse_range

__all__ = [
    "write_csv",
    "get_db_session",
    "init_database",
    "parse_int_list",
    "parse_range",
]
