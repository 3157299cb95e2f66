"""Parsing utilities for pmf files."""

from __future__ import annotations

import logging
from pathlib import Path

from .exceptions import InvalidParameterError, PmfValidationError
from .pmf import Pmf, normalize_and_sort

_LOGGER = logging.getLogger(__name__)


class PmfParseError(InvalidParameterError):
    """Raised when a pmf file cannot be parsed."""


class PmfFileParser:
    """Parser for plain-text pmf files.

    One probability per line; blank lines and ``#`` comments are ignored.
    Entries must already be non-increasing unless sorting is requested.
    """

    @staticmethod
    def parse_values(text: str) -> list[float]:
        """Return the numeric entries of a pmf file body."""
        values: list[float] = []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError as err:
                raise PmfParseError(f"Line {number}: not a number: {line!r}") from err
        if not values:
            raise PmfParseError("Pmf file contains no probabilities")
        return values

    @staticmethod
    def parse_pmf(text: str, *, sort: bool = False) -> Pmf:
        """Build a Pmf from a pmf file body."""
        values = PmfFileParser.parse_values(text)
        if sort:
            pmf, permutation = normalize_and_sort(values)
            if permutation != tuple(range(1, len(values) + 1)):
                _LOGGER.info("Reordered pmf entries: %s", permutation)
            return pmf
        try:
            return Pmf(values)
        except PmfValidationError as err:
            raise PmfParseError(f"Invalid pmf: {err}") from err

    @staticmethod
    def load(path: str | Path, *, sort: bool = False) -> Pmf:
        """Read and parse a pmf file."""
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as err:
            raise PmfParseError(f"Cannot read pmf file {path}: {err}") from err
        _LOGGER.debug("Loaded pmf file %s", path)
        return PmfFileParser.parse_pmf(text, sort=sort)
