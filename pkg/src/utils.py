import fnmatch
import hashlib
import logging
import os
import re
import sys
import tempfile
from pathlib import Path

from tqdm import tqdm


class MutationToolError(Exception):
    """Base class of every error raised by this package."""


class TqdmLoggingHandler(logging.Handler):
    """
    Route log records through tqdm.write so that progress bars stay intact.
    """
    def emit(self, record):
        try:
            tqdm.write(self.format(record), file=sys.stderr)
        except Exception:
            self.handleError(record)


def setup_logging(level=logging.INFO):
    handler = TqdmLoggingHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    # basicConfig is a no-op when handlers exist, so replace them explicitly
    root.handlers.clear()
    logging.basicConfig(level=level, handlers=[handler])


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def tree_hash(root, include=("*.java",), exclude=()):
    """
    Content hash of a source tree: relative paths and bytes of every matching file.
    """
    digest = hashlib.sha256()
    for rel_path in discover_files(root, include, exclude):
        digest.update(rel_path.encode("utf-8") + b"\0")
        digest.update(Path(root, rel_path).read_bytes())
        digest.update(b"\0")
    return digest.hexdigest()


def count_loc(content):
    """Number of non-blank lines of a source file (bytes)."""
    return sum(1 for line in content.splitlines() if line.strip())


def discover_files(root, include=("*.java",), exclude=()):
    """
    List files under root whose posix relative path matches one of the include globs
    and none of the exclude globs. Globs use fnmatch semantics, so '*' also matches '/'.
    Returns sorted relative posix paths.
    """
    root = Path(root)
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for filename in filenames:
            rel_path = Path(dirpath, filename).relative_to(root).as_posix()
            if not any(fnmatch.fnmatch(rel_path, pattern) for pattern in include):
                continue
            if any(fnmatch.fnmatch(rel_path, pattern) for pattern in exclude):
                continue
            found.append(rel_path)
    return sorted(found)


def qualified_id(path, mutant_id):
    """Project-wide mutant key, e.g. 'org/acme/Foo.java:ho_2'."""
    return f"{path}:{mutant_id}"


def split_qualified_id(key):
    path, _, mutant_id = key.rpartition(":")
    return path, parse_mutant_id(mutant_id)


def parse_mutant_id(text):
    """First-order ids are integers; higher-order and manual ids keep their prefix."""
    text = str(text)
    return int(text) if text.isdigit() else text


def natural_key(value):
    """Sort key that orders embedded numbers numerically ('Foo.java:ho_10' after 'Foo.java:ho_9')."""
    return [(0, int(part), "") if part.isdigit() else (1, 0, part) for part in re.split(r"(\d+)", str(value)) if part]


def write_atomic(path, data):
    """Write bytes (or text) to path through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def format_percent(value):
    """One decimal place, 'n/a' when undefined."""
    if value is None:
        return "n/a"
    return f"{value * 100:.1f}%"
