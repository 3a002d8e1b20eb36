"""
Association records and their CSV representation.

A record is emitted by a light (the receiver) when it detects a traffic
element after having cached an advertisement from another light (the sender):
{receiver id, receiver detection time, sender id, sender advertisement time}.
"""
import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Union

import pandas as pd

from backend.errors import InputError, RecordFormatError
from backend.graph.core import NodeId

RECORD_COLUMNS = ["receiver", "recv_time", "sender", "send_time"]


@dataclass(frozen=True, slots=True)
class AssociationRecord:
    receiver: NodeId
    receiver_time: float
    sender: NodeId
    sender_time: float

    @property
    def interval(self) -> float:
        return self.receiver_time - self.sender_time


def batch_by_period(records: Iterable[AssociationRecord], period: float) -> list[list[AssociationRecord]]:
    """Records grouped by reporting period floor(receiver_time / T_c); empty periods included."""
    grouped: dict[int, list[AssociationRecord]] = defaultdict(list)
    for record in records:
        grouped[int(record.receiver_time // period)].append(record)
    if not grouped:
        return []
    return [grouped.get(k, []) for k in range(min(min(grouped), 0), max(grouped) + 1)]


def records_to_frame(records: Iterable[AssociationRecord]) -> pd.DataFrame:
    rows = [(r.receiver, r.receiver_time, r.sender, r.sender_time) for r in records]
    return pd.DataFrame(rows, columns=RECORD_COLUMNS)


def write_records(records: Iterable[AssociationRecord], path: Union[str, Path]) -> None:
    """Write the ingest CSV; fixed 9-decimal times keep the output byte-stable."""
    records_to_frame(records).to_csv(path, index=False, float_format="%.9f", lineterminator="\n")


def read_records(path: Union[str, Path]) -> list[AssociationRecord]:
    """
    Parse a record CSV. Raises RecordFormatError naming the first bad line
    (line numbers count the header as line 1).
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"record file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise RecordFormatError(str(path), 1, "empty file, expected header " + ",".join(RECORD_COLUMNS))
    except pd.errors.ParserError as e:
        raise RecordFormatError(str(path), _parser_error_line(str(e)), str(e))

    if list(frame.columns) != RECORD_COLUMNS:
        raise RecordFormatError(str(path), 1, f"expected header {','.join(RECORD_COLUMNS)}, got {','.join(frame.columns)}")

    return list(_parse_rows(frame, str(path)))


def _parse_rows(frame: pd.DataFrame, source: str) -> Iterator[AssociationRecord]:
    for offset, row in enumerate(frame.itertuples(index=False)):
        line_number = offset + 2
        receiver, recv_time, sender, send_time = row
        if not receiver or not sender:
            raise RecordFormatError(source, line_number, "empty node id")
        try:
            yield AssociationRecord(receiver, float(recv_time), sender, float(send_time))
        except ValueError:
            raise RecordFormatError(source, line_number, f"non-numeric time in {','.join(row)!r}")


def _parser_error_line(message: str) -> int:
    # pandas reports "... in line N, saw M"
    for token in message.replace(",", " ").split():
        if token.isdigit():
            return int(token)
    return 0


def read_labels(path: Union[str, Path]) -> dict[NodeId, str]:
    """Read a `node,sector` CSV into an ordered mapping."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"label file not found: {path}")
    labels: dict[NodeId, str] = {}
    with path.open(newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["node", "sector"]:
            raise RecordFormatError(str(path), 1, f"expected header node,sector, got {header}")
        for line_number, row in enumerate(reader, start=2):
            if len(row) != 2 or not row[0]:
                raise RecordFormatError(str(path), line_number, f"expected 'node,sector', got {row}")
            if row[0] in labels:
                raise RecordFormatError(str(path), line_number, f"duplicate node {row[0]!r}")
            labels[row[0]] = row[1]
    return labels


def write_labels(labels: dict[NodeId, object], path: Union[str, Path]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["node", "sector"])
    writer.writerows((node, label) for node, label in labels.items())
    Path(path).write_text(buf.getvalue())
