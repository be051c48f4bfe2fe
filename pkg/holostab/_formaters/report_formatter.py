"""This module contains the formatting helpers turning records into CSV and JSON text.

Warning:
    Contents of this module are intended to be used internally by the library and *not* by the
    user. Changes to this module are not considered breaking changes and may not be documented in
    the changelog.
"""
import csv
import io
import json
from enum import Enum
from typing import Any, Iterable, Sequence

import numpy as np

from holostab._records.record import Record
from holostab._records.results import BenchRecord
from holostab._records.trajectory import TrajectoryRow
from holostab._utils.json_serializer import RecordEncoder


class ReportFormatter:
    """
    Provides methods for writing result records as text.

    Methods:
        - format_value(value) -> str
        - format_rows(records: Iterable[Record], columns: Sequence[str]) -> str
        - format_trajectory(rows: Iterable[TrajectoryRow]) -> str
        - format_bench(records: Iterable[BenchRecord]) -> str
        - format_json(payload) -> str
    """

    @staticmethod
    def format_value(value: Any) -> str:
        """
        Formats one CSV cell; floats keep 17 significant digits with a '.' separator.

        Args:
        - value: Cell value.

        Returns:
        - str: The formatted cell, empty for None.
        """
        if value is None:
            return ""
        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        if isinstance(value, (float, np.floating)):
            return "%.17g" % value
        if isinstance(value, Enum):
            return str(value.value)
        return str(value)

    @staticmethod
    def format_rows(records: Iterable[Record], columns: Sequence[str]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for record in records:
            writer.writerow(
                [ReportFormatter.format_value(getattr(record, name)) for name in columns]
            )
        return buffer.getvalue()

    @staticmethod
    def format_trajectory(rows: Iterable[TrajectoryRow]) -> str:
        """
        Formats a flow trajectory as CSV, one attempted step per line.
        """
        return ReportFormatter.format_rows(rows, TrajectoryRow.fields())

    @staticmethod
    def format_bench(records: Iterable[BenchRecord]) -> str:
        return ReportFormatter.format_rows(records, BenchRecord.fields())

    @staticmethod
    def format_json(payload: Any) -> str:
        """
        Formats records, dictionaries and numpy values as indented JSON.
        """
        return json.dumps(payload, cls=RecordEncoder, indent=2)
