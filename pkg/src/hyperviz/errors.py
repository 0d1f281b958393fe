"""Exception types shared across the hyperviz modules."""


class HypervizError(Exception):
    """Base class for all hyperviz errors."""


class EmptyInputError(HypervizError):
    """Input had no header row."""


class RaggedRowError(HypervizError):
    """A data row's field count differs from the header's.

    ``row_index`` is the 0-based index of the offending data row
    (the header is not counted).
    """

    def __init__(self, row_index, n_fields, n_expected):
        self.row_index = row_index
        self.n_fields = n_fields
        self.n_expected = n_expected
        super().__init__(
            f"row {row_index} has {n_fields} fields, expected {n_expected}"
        )


class DuplicateHeaderError(HypervizError):
    """Two header fields share a name."""


class AllMissingError(HypervizError):
    """An operation required at least one present cell."""


class NonPositiveForLogError(HypervizError):
    """A log transform was applied to values that are not strictly positive."""


class UnknownColumnError(HypervizError):
    """A mapping or template referenced a column the catalog does not have."""


class KindMismatchError(HypervizError):
    """A column's kind is not acceptable for the channel it was assigned to."""


class UnknownPlaceholderError(HypervizError):
    """A link template placeholder named a column the catalog does not have."""


class RowOutOfRangeError(HypervizError):
    """A row id was outside the catalog's row range."""


class IdMismatchError(HypervizError):
    """Two landmarks that should share an id do not."""


class IdSetMismatchError(HypervizError):
    """Two landmark sets do not cover the same ids.

    ``missing`` holds ids present in the first set only, ``extra`` ids
    present in the second set only.
    """

    def __init__(self, missing, extra):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        parts = []
        if self.missing:
            parts.append("missing from drawn: " + ", ".join(self.missing))
        if self.extra:
            parts.append("not in truth: " + ", ".join(self.extra))
        super().__init__("; ".join(parts) or "id sets differ")


class EmptyLandmarkSetError(HypervizError):
    """Scoring requires at least one landmark."""
