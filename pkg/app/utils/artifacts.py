import hashlib
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional


def content_hash(paths: Iterable[Optional[os.PathLike]]) -> str:
    """SHA-256 over the bytes of the given files, in order; missing entries contribute nothing."""
    digest = hashlib.sha256()
    for path in paths:
        if path and Path(path).is_file():
            with open(path, "rb") as fh:
                for chunk in iter(lambda: fh.read(1 << 20), b""):
                    digest.update(chunk)
    return digest.hexdigest()


def atomic_write_text(path: os.PathLike, text: str) -> Path:
    """Write text to a temp file next to `path` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def comment_header(config_lines: Iterable[str], input_hash: str) -> str:
    """`#`-prefixed preamble embedding the run configuration and the input hash."""
    lines = [f"# {line}" if line else "#" for line in config_lines]
    lines.append(f"# input_sha256 = {input_hash}")
    return "\n".join(lines) + "\n"
