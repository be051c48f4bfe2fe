"""This module represents the custom JSON encoder used for records and numpy values."""
import re
from enum import Enum
from json import JSONEncoder
from pathlib import Path
from typing import Any, List

import numpy as np

from holostab._records.record import Record

FLOAT_FORMAT = "%.17g"

_FLOAT_TAG = "\x00float:"
_ENCODED_TAG = re.compile(r'"\\u0000float:(\d+)"')


class RecordEncoder(JSONEncoder):
    """Custom JSON encoder for serializing Record objects e.g. StabilityResult, RunManifest.

    Numpy scalars and arrays are converted to their Python counterparts, enums to their
    value and paths to strings. Finite floats are written with 17 significant digits, the
    same as the CSV reports.
    """

    def default(self, o):
        """Serialize an object to a JSON-serializable format.

        Args:
            o: The object to be serialized.

        Returns:
            JSON-serializable representation of the object.
        """
        if isinstance(o, Record):
            return o.to_dict()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, Enum):
            return o.value
        if isinstance(o, Path):
            return str(o)

        return super().default(o)

    def encode(self, o):
        floats: List[str] = []
        text = super().encode(self._tag_floats(o, floats))
        return _ENCODED_TAG.sub(lambda match: floats[int(match.group(1))], text)

    def _tag_floats(self, o: Any, floats: List[str]) -> Any:
        """Replace finite floats by string tags that ``encode`` swaps for formatted numbers."""
        if isinstance(o, (bool, str, int)) or o is None:
            return o
        if isinstance(o, float):
            if not np.isfinite(o):
                return o
            text = FLOAT_FORMAT % o
            # integral values keep a decimal point so they decode as floats
            floats.append(text if any(ch in text for ch in ".en") else f"{text}.0")
            return f"{_FLOAT_TAG}{len(floats) - 1}"
        if isinstance(o, dict):
            return {key: self._tag_floats(value, floats) for key, value in o.items()}
        if isinstance(o, (list, tuple)):
            return [self._tag_floats(item, floats) for item in o]
        return self._tag_floats(self.default(o), floats)
