# cprsutils/hydro/io/atomic_write.py
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence, Union

PathLike = Union[str, Path]


def _fsync_dir(dirpath: Path) -> None:
    # best effort; some filesystems refuse O_RDONLY on directories
    try:
        fd = os.open(str(dirpath), os.O_RDONLY)
    except OSError:
        return
    try:
        os.fsync(fd)
    except OSError:
        pass
    finally:
        os.close(fd)


@contextmanager
def _replace_on_success(path: PathLike) -> Iterator[io.BufferedWriter]:
    """
    Yield a temp file next to `path`; on clean exit fsync it and
    os.replace it over `path`. On error the temp file is removed and
    `path` is untouched.
    """
    dst = Path(path)
    dst.parent.mkdir(parents=True, exist_ok=True)
    fh = tempfile.NamedTemporaryFile(
        dir=str(dst.parent), prefix=dst.name + ".", suffix=".tmp", delete=False
    )
    tmp_path = Path(fh.name)
    try:
        with fh:
            yield fh
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_path, dst)
        _fsync_dir(dst.parent)
    finally:
        if tmp_path.exists():
            try:
                tmp_path.unlink()
            except OSError:
                pass


def atomic_write_bytes(path: PathLike, data: bytes) -> None:
    with _replace_on_success(path) as fh:
        fh.write(data)


def atomic_write_text(path: PathLike, text: str, encoding: str = "utf-8") -> None:
    atomic_write_bytes(path, text.encode(encoding))


def atomic_write_json(path: PathLike, obj: Any) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]], comments: Sequence[str] = ()) -> str:
    """
    CSV body with optional leading '# ...' comment lines (provenance echo).
    Floats are written with repr so files round-trip exactly.
    """
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def atomic_write_csv(
    path: PathLike,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    comments: Sequence[str] = (),
) -> None:
    atomic_write_text(path, csv_text(header, rows, comments))


class NdjsonWriter:
    """
    Line-oriented JSON sink. Lines go to a temp file and the final path
    only appears on close(), so a crashed run leaves no half log behind.
    """

    def __init__(self, path: PathLike):
        self.path = Path(path)
        self._cm = _replace_on_success(self.path)
        self._fh = self._cm.__enter__()
        self.lines = 0

    def write(self, record: Mapping[str, Any]) -> None:
        self._fh.write((json.dumps(record, separators=(",", ":")) + "\n").encode("utf-8"))
        self.lines += 1

    def close(self) -> None:
        if self._fh is not None:
            self._cm.__exit__(None, None, None)
            self._fh = None

    def abort(self) -> None:
        if self._fh is not None:
            try:
                self._cm.__exit__(RuntimeError, RuntimeError("aborted"), None)
            except RuntimeError:
                pass
            self._fh = None

    def __enter__(self) -> "NdjsonWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.close()
        else:
            self.abort()
