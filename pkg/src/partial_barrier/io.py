"""Dataset and trace files."""

import csv
import logging
from pathlib import Path
from typing import IO, List, Optional, Sequence, Union

import numpy as np
from rx import operators as ops
from rx.disposable import Disposable
from rx.subject import Subject

from .cluster.streams import StreamFactory
from .config.model import feature_dim
from .features import kernel_matrix
from .schema.data import Dataset
from .schema.trace import TRACE_HEADER, IterationRecord, TraceRow

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DATA_STREAM = "data"


class DatasetFormatError(ValueError):
    def __init__(self, line: int, reason: str) -> None:
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


def dataset_header(n: int) -> List[str]:
    return [f"x{j}" for j in range(1, n + 1)] + ["y"]


def load_dataset_csv(path: PathLike) -> Dataset:
    """Read a `x1,...,xn,y` CSV; every row must have n + 1 finite decimal fields."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise DatasetFormatError(1, "empty file")
        header = [h.strip() for h in header]
        n = len(header) - 1
        if n < 1 or header != dataset_header(n):
            raise DatasetFormatError(1, f"expected header x1,...,xn,y, got {','.join(header)}")

        rows: List[List[float]] = []
        for line, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != n + 1:
                raise DatasetFormatError(line, f"expected {n + 1} fields, got {len(fields)}")
            try:
                values = [float(v) for v in fields]
            except ValueError as e:
                raise DatasetFormatError(line, str(e)) from e
            if not np.isfinite(values).all():
                raise DatasetFormatError(line, "non-finite value")
            rows.append(values)

    if not rows:
        raise DatasetFormatError(2, "no examples")
    table = np.asarray(rows, dtype=np.float64)
    logger.info(f"Loaded {table.shape[0]} examples with n={n} from {path}")
    return Dataset(X=table[:, :n], y=table[:, n])


def write_dataset_csv(data: Dataset, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(dataset_header(data.n))
        for x, y in zip(data.X.tolist(), data.y.tolist()):
            writer.writerow([repr(v) for v in x] + [repr(y)])
    return path


def generate_synthetic(
    n: int, m: int, seed: int, noise_sd: float = 0.0
) -> tuple:
    """
    Draw y_i = theta_true . K[x_i] + eps_i with x_i uniform on [-1, 1]^n.

    Returns:
        (Dataset, theta_true)
    """
    if n < 1 or m < 1:
        raise ValueError(f"n and m must be >= 1, got n={n}, m={m}")
    if noise_sd < 0:
        raise ValueError(f"noise_sd must be >= 0, got {noise_sd}")
    streams = StreamFactory(seed)
    theta_true = streams.generator(DATA_STREAM, 0).normal(size=feature_dim(n))
    X = streams.generator(DATA_STREAM, 1).uniform(-1.0, 1.0, size=(m, n))
    y = kernel_matrix(X) @ theta_true
    if noise_sd > 0:
        y = y + streams.generator(DATA_STREAM, 2).normal(scale=noise_sd, size=m)
    return Dataset(X=X, y=y), theta_true


class TraceWriter:
    """
    Streams IterationRecords to a trace CSV as the solver emits them.

    Use as `with TraceWriter(path).attach(subject): ...`. The file is closed when the
    subject completes or errors, and at the latest when the block exits.
    """

    def __init__(self, path: PathLike) -> None:
        self.path = Path(path)
        self.rows_written = 0
        self._file: Optional[IO[str]] = None
        self._writer = None
        self._subscription: Optional[Disposable] = None

    def open(self) -> "TraceWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(TRACE_HEADER)
        return self

    def attach(self, subject: Subject) -> "TraceWriter":
        if self._file is None:
            self.open()
        self._subscription = subject.pipe(
            ops.map(lambda record: record.to_row())
        ).subscribe(
            on_next=self.write_row,
            on_error=self._on_error,
            on_completed=self.close,
        )
        return self

    def write_row(self, row: TraceRow) -> None:
        if self._writer is None:
            raise RuntimeError(f"trace writer for {self.path} is not open")
        self._writer.writerow(row.to_csv())
        self.rows_written += 1

    def _on_error(self, error: Exception) -> None:
        logger.warning(f"Trace {self.path} ends early after {self.rows_written} rows: {str(error)}")
        self.close()

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None
            self._writer = None
        if self._subscription is not None:
            self._subscription.dispose()
            self._subscription = None

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()


def write_trace(records: Sequence[IterationRecord], path: PathLike) -> Path:
    with TraceWriter(path).open() as writer:
        for record in records:
            writer.write_row(record.to_row())
    return Path(path)


def read_trace(path: PathLike) -> List[TraceRow]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != TRACE_HEADER:
            raise DatasetFormatError(1, f"unexpected trace header {reader.fieldnames}")
        return [TraceRow.from_csv(row) for row in reader]
