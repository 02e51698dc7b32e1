#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0.txt
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
#
"""Deterministic CSV output with a commented header block."""

import csv
import logging
import math
from typing import Any, Iterable, Mapping, Optional, Sequence

import click

logger = logging.getLogger(__name__)

UNITS = "Ω_S = ħ = k_B = 1"


def format_value(value: Any) -> str:
    """Shortest round-trip text for floats, empty field for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


class CsvReport:
    """
    Writes one CSV table preceded by '#' comment lines for the tool version, unit convention, command and every
    parameter. Data rows contain only values computed from the parameters, so repeated runs produce identical files.

    Used as a context manager; path of "-" writes to standard output.
    """

    def __init__(
        self,
        path: str,
        columns: Sequence[str],
        command: str,
        parameters: Mapping[str, Any],
        version: Optional[str] = None,
    ):
        self.path = path
        self.columns = list(columns)
        self.command = command
        self.parameters = dict(parameters)
        self.version = version or "unknown"
        self.rows_written = 0
        self._file = None
        self._writer = None

    def __enter__(self) -> "CsvReport":
        self._file = click.open_file(self.path, "w", encoding="utf-8", lazy=False)
        self._file.__enter__()
        self._writer = csv.writer(self._file, lineterminator="\n")
        self.comment(f"hmftools {self.version}")
        self.comment(f"units: {UNITS}")
        self.comment(f"command: {self.command}")
        for key in sorted(self.parameters):
            self.comment(f"{key} = {_format_parameter(self.parameters[key])}")
        self._writer.writerow(self.columns)
        return self

    def __exit__(self, *exc):
        self._file.__exit__(*exc)
        if exc[0] is None:
            logger.info(f"Wrote {self.rows_written} rows to {self.path}")
        return False

    def comment(self, text: str):
        self._file.write(f"# {text}\n")

    def write_row(self, values: Mapping[str, Any]):
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"Unknown CSV columns: {sorted(unknown)}")
        self._writer.writerow([format_value(values.get(c)) for c in self.columns])
        self.rows_written += 1

    def write_rows(self, rows: Iterable[Mapping[str, Any]]):
        for row in rows:
            self.write_row(row)


def _format_parameter(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value)
    return format_value(value)
