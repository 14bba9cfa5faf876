"""
Test execution: the green gate, in-place mutant runs with unconditional restore,
outcome classification and an optional parallel mode over workspace clones.
"""

import logging
import os
import queue
import shutil
import signal
import subprocess
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from pathlib import Path

from src.java_front import splice
from src.utils import MutationToolError, sha256_bytes

logger = logging.getLogger(__name__)

TIMEOUT = "timeout"
DEFAULT_COMPILE_ERROR_MARKERS = ("COMPILATION ERROR", "error: ", "cannot find symbol")
MINIMUM_TIMEOUT = 60.0
TIMEOUT_FACTOR = 10

STATUSES = ("killed", "killed-timeout", "survived", "invalid")


class NotGreen(MutationToolError):
    def __init__(self, exit_status, output):
        self.exit_status = exit_status
        self.output = output
        super().__init__(f"the test suite does not pass on the unmodified sources (exit status {exit_status})")


class RestoreFailure(MutationToolError):
    pass


class InvalidBuildConfig(MutationToolError):
    pass


@dataclass(frozen=True)
class BuildConfig:
    command: tuple
    working_dir: Path
    timeout: float = MINIMUM_TIMEOUT
    env_overrides: dict = field(default_factory=dict)
    compile_error_markers: tuple = DEFAULT_COMPILE_ERROR_MARKERS
    clean_command: tuple = ()
    backup_dir: Path = None

    def __post_init__(self):
        if not self.command:
            raise InvalidBuildConfig("the build command is empty")
        if self.timeout is None or self.timeout <= 0:
            raise InvalidBuildConfig(f"timeout must be positive, got {self.timeout}")


@dataclass(frozen=True)
class GreenResult:
    duration: float
    output: bytes = b""


@dataclass
class BuildRun:
    exit_status: object
    timed_out: bool
    output: bytes
    duration: float


@dataclass
class MutantOutcome:
    mutant_id: object
    status: str
    exit_status: object
    output: bytes
    duration: float
    source_path: str = ""

    @property
    def build_output(self):
        return self.output.decode("utf-8", "replace")


def default_timeout(green_duration):
    """max(60 s, 10 x the green run)."""
    return max(MINIMUM_TIMEOUT, TIMEOUT_FACTOR * green_duration)


def _pump(stream, tag, chunks, lock):
    for line in iter(stream.readline, b""):
        with lock:
            chunks.append(tag + line if line.endswith(b"\n") else tag + line + b"\n")
    stream.close()


def _kill(process):
    try:
        os.killpg(process.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        process.kill()


def run_build(command, working_dir, timeout, env_overrides=None):
    """
    Run command in working_dir, capturing both streams line by line as '[out] ' and
    '[err] ' tagged bytes in arrival order. The whole process group is killed on timeout.
    """
    env = dict(os.environ)
    env.update({str(key): str(value) for key, value in (env_overrides or {}).items()})
    chunks, lock = [], threading.Lock()
    started = time.monotonic()
    process = subprocess.Popen(list(command), cwd=working_dir, env=env, stdin=subprocess.DEVNULL,
                               stdout=subprocess.PIPE, stderr=subprocess.PIPE, start_new_session=True)
    readers = [threading.Thread(target=_pump, args=(process.stdout, b"[out] ", chunks, lock), daemon=True),
               threading.Thread(target=_pump, args=(process.stderr, b"[err] ", chunks, lock), daemon=True)]
    for reader in readers:
        reader.start()
    timed_out = False
    try:
        exit_status = process.wait(timeout=timeout)
    except subprocess.TimeoutExpired:
        timed_out = True
        _kill(process)
        process.wait()
        exit_status = TIMEOUT
    except BaseException:
        _kill(process)
        process.wait()
        raise
    finally:
        for reader in readers:
            reader.join(timeout=5)
    duration = time.monotonic() - started
    with lock:
        output = b"".join(chunks)
    return BuildRun(exit_status=exit_status, timed_out=timed_out, output=output, duration=duration)


def classify(exit_status, timed_out, output, cfg):
    """invalid (a compile error marker occurs in the output) > killed-timeout > survived (exit 0) > killed."""
    text = output.decode("utf-8", "replace") if isinstance(output, bytes) else output
    markers = cfg.compile_error_markers if hasattr(cfg, "compile_error_markers") else cfg
    if any(marker in text for marker in markers):
        return "invalid"
    if timed_out:
        return "killed-timeout"
    if exit_status == 0:
        return "survived"
    return "killed"


def _clean(cfg):
    if cfg.clean_command:
        run = run_build(cfg.clean_command, cfg.working_dir, cfg.timeout, cfg.env_overrides)
        if run.exit_status != 0:
            logger.warning("clean command exited with %s", run.exit_status)


def verify_green(cfg):
    """Run the build once on the pristine sources; raises NotGreen unless it exits 0 in time."""
    run = run_build(cfg.command, cfg.working_dir, cfg.timeout, cfg.env_overrides)
    _clean(cfg)
    if run.timed_out or run.exit_status != 0:
        raise NotGreen(run.exit_status, run.output)
    logger.info("test suite is green (%.1f s)", run.duration)
    return GreenResult(duration=run.duration, output=run.output)


def _backup_path(cfg, rel_path):
    return Path(cfg.backup_dir, rel_path) if cfg.backup_dir is not None else None


def restore(target, original):
    target.write_bytes(original)
    if sha256_bytes(target.read_bytes()) != sha256_bytes(original):
        raise RestoreFailure(f"{target} differs from its original after restore")


def run_mutant(cfg, file, mutant, source_root):
    """
    Splice mutant into file on disk, run the build and restore the original bytes.

    A copy of the original is kept under cfg.backup_dir while the mutant is in place,
    so that an interrupted run can be repaired with recover_workspace.
    """
    target = Path(source_root, file.path)
    backup = _backup_path(cfg, file.path)
    if backup is not None:
        backup.parent.mkdir(parents=True, exist_ok=True)
        backup.write_bytes(file.content)
    try:
        target.write_bytes(splice(file, mutant.edits))
        run = run_build(cfg.command, cfg.working_dir, cfg.timeout, cfg.env_overrides)
        _clean(cfg)
    finally:
        restore(target, file.content)
        if backup is not None:
            backup.unlink()
    status = classify(run.exit_status, run.timed_out, run.output, cfg)
    logger.debug("%s:%s %s (exit %s, %.1f s)", file.path, mutant.mutant_id, status, run.exit_status, run.duration)
    return MutantOutcome(mutant_id=mutant.mutant_id, status=status, exit_status=run.exit_status,
                         output=run.output, duration=run.duration, source_path=file.path)


def recover_workspace(backup_dir, source_root):
    """Put back every original left in backup_dir by an interrupted run. Returns the restored paths."""
    backup_dir = Path(backup_dir)
    restored = []
    if not backup_dir.is_dir():
        return restored
    for backup in sorted(path for path in backup_dir.rglob("*") if path.is_file()):
        rel_path = backup.relative_to(backup_dir)
        original = backup.read_bytes()
        restore(Path(source_root, rel_path), original)
        backup.unlink()
        restored.append(rel_path.as_posix())
        logger.warning("restored %s from an interrupted run", rel_path.as_posix())
    return restored


def _clone_workspaces(cfg, source_root, jobs, scratch):
    working_dir = Path(cfg.working_dir).resolve()
    source_root = Path(source_root).resolve()
    try:
        source_offset = source_root.relative_to(working_dir)
    except ValueError:
        raise InvalidBuildConfig(f"parallel runs need the source root {source_root} inside the build dir {working_dir}")
    clones = []
    for index in range(jobs):
        clone_dir = Path(scratch, f"workspace_{index}")
        shutil.copytree(working_dir, clone_dir, symlinks=True)
        clone_cfg = replace(cfg, working_dir=clone_dir,
                            backup_dir=Path(scratch, f"backup_{index}"))
        clones.append((clone_cfg, clone_dir / source_offset))
    return clones


def run_mutants(cfg, work, source_root, jobs=1, on_outcome=None):
    """
    Execute (SourceFile, mutant) pairs and yield their outcomes.

    With jobs > 1 the build dir is copied into jobs clones and one mutant runs per clone
    at a time; outcomes are still yielded to (and persisted by) the calling thread only.
    """
    work = list(work)
    if jobs <= 1:
        for file, mutant in work:
            outcome = run_mutant(cfg, file, mutant, source_root)
            if on_outcome is not None:
                on_outcome(outcome)
            yield outcome
        return

    scratch = tempfile.mkdtemp(prefix="mutation_workspaces_")
    try:
        clones = queue.Queue()
        for clone in _clone_workspaces(cfg, source_root, jobs, scratch):
            clones.put(clone)

        def run_in_clone(file, mutant):
            clone_cfg, clone_root = clones.get()
            try:
                return run_mutant(clone_cfg, file, mutant, clone_root)
            finally:
                clones.put((clone_cfg, clone_root))

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_in_clone, file, mutant) for file, mutant in work]
            try:
                for future in as_completed(futures):
                    outcome = future.result()
                    if on_outcome is not None:
                        on_outcome(outcome)
                    yield outcome
            except BaseException:
                for future in futures:
                    future.cancel()
                raise
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
