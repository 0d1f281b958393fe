"""Archive link templates: per-point URLs by column substitution.

A template like ``http://archive/obj?id={name}&m={mag}`` is expanded
against one catalog row; each ``{column}`` placeholder becomes that
row's cell, percent-encoded. Templates keep catalogs small: one string
serves a million rows.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from urllib.parse import quote

from .catalog import Catalog, format_float_shortest
from .errors import RowOutOfRangeError, UnknownPlaceholderError

_PLACEHOLDER = re.compile(r"\{([^{}]*)\}")


@dataclass(frozen=True)
class LinkTemplate:
    template: str

    def placeholders(self) -> list[str]:
        return _PLACEHOLDER.findall(self.template)

    def validate(self, catalog: Catalog) -> None:
        for name in self.placeholders():
            if name not in catalog:
                raise UnknownPlaceholderError(f"no column {name!r} for placeholder")


def resolve_link(template: LinkTemplate, catalog: Catalog, row_id: int) -> str:
    """Expand the template for one catalog row.

    Numeric cells use the shortest round-trip decimal form, missing
    cells render empty, and every substituted value is percent-encoded
    per RFC 3986 (only unreserved characters pass through).
    """
    if not 0 <= row_id < catalog.n_rows:
        raise RowOutOfRangeError(
            f"row {row_id} out of range for {catalog.n_rows} rows"
        )

    def substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in catalog:
            raise UnknownPlaceholderError(f"no column {name!r} for placeholder")
        cell = catalog.column(name).cell(row_id)
        if cell is None:
            return ""
        text = format_float_shortest(cell) if isinstance(cell, float) else cell
        return quote(text, safe="")

    return _PLACEHOLDER.sub(substitute, template.template)
