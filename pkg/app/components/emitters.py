import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from sqlmodel import SQLModel

logger = logging.getLogger(__name__)

Cell = Union[str, int, float, bool, None]


def format_cell(value: Cell) -> str:
    match value:
        case None:
            return ""
        case bool():
            return "true" if value else "false"
        case float():
            return format(value, ".17g")
        case _:
            return str(value)


def render_json(document: Union[SQLModel, Sequence[SQLModel]]) -> str:
    """One JSON document per invocation."""
    if isinstance(document, SQLModel):
        payload = document.model_dump(mode="json")
    else:
        payload = [item.model_dump(mode="json") for item in document]
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def render_csv(header: List[str], rows: Iterable[Sequence[Cell]]) -> str:
    """CSV with a header row; floats carry 17 significant digits."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(value) for value in row])
    return buffer.getvalue()


def emit(text: str, output: Optional[Path] = None) -> None:
    """Write rendered output to a file, or to stdout when no path is given."""
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {len(text)} characters to {output}")
