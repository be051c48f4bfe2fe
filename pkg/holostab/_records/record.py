"""Base class of the slotted result records (trajectory rows, stability results,
benchmark rows, run manifests)."""

from typing import Any, Tuple
from warnings import warn

import numpy as np

from holostab._utils.types import JSONDict


def _plain(value: Any) -> Any:
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


class Record:
    """
    Fixed set of named fields, compared through ``_id_attrs``.

    Subclasses declare their fields in ``__slots__``; the slot order is also the CSV column
    order used by the report formatter.
    """

    __slots__ = ()
    _id_attrs = ()

    @classmethod
    def fields(cls) -> Tuple[str, ...]:
        return cls.__slots__

    def __repr__(self):
        shown = ", ".join(f"{name}={getattr(self, name)!r}" for name in self.fields())
        return f"{type(self).__name__}({shown})"

    __str__ = __repr__

    def __eq__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        if not self._id_attrs:
            warn(
                f"{type(self).__name__} records have no identity fields; comparing them is"
                " always True.",
                stacklevel=2,
            )
        return self._id_attrs == other._id_attrs

    __hash__ = None

    def to_dict(self) -> JSONDict:
        """Field values as plain Python objects, nested records included."""
        return {name: _plain(getattr(self, name)) for name in self.fields()}
