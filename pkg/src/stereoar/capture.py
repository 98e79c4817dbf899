"""Frame-pair acquisition: file and synthetic sources, flip, mailbox.

Replaces live USB capture with reproducible sources.  Every source hands
out matched (left, right) frame pairs; the right frame is rotated 180
degrees before it is returned, because the physical right camera is
mounted upside down.  The :class:`FrameMailbox` is the one shared-mutable
object in the package: producers deposit whole pairs, readers always see
a matched pair from a single deposit (last writer wins).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EndOfStream, ReadBeforeFirstDeposit, ReadError
from .imageio import load_image

__all__ = [
    "CaptureConfig",
    "FilePairSource",
    "SinglePairSource",
    "SyntheticSource",
    "FrameMailbox",
    "flip_180",
    "open_source",
    "LEFT_PATTERN",
    "RIGHT_PATTERN",
]

LEFT_PATTERN = "left_%06d.png"
RIGHT_PATTERN = "right_%06d.png"


def flip_180(image: np.ndarray) -> np.ndarray:
    """Rotate an image 180 degrees: pixel (x, y) -> (w-1-x, h-1-y)."""
    return np.ascontiguousarray(np.asarray(image)[::-1, ::-1])


def _check_pair(left: np.ndarray, right: np.ndarray, context: str) -> None:
    if left.shape != right.shape:
        raise ReadError(f"{context}: left/right frame shapes differ: {left.shape} vs {right.shape}")


class FilePairSource:
    """Frame pairs from numbered image files in one directory.

    Files follow ``left_%06d.png`` / ``right_%06d.png`` starting at
    ``start``; the sequence ends at the first missing pair.
    """

    def __init__(self, directory, start: int = 0,
                 left_pattern: str = LEFT_PATTERN, right_pattern: str = RIGHT_PATTERN) -> None:
        self.directory = Path(directory)
        self.index = start
        self.left_pattern = left_pattern
        self.right_pattern = right_pattern

    def next_pair(self) -> tuple[np.ndarray, np.ndarray]:
        lp = self.directory / (self.left_pattern % self.index)
        rp = self.directory / (self.right_pattern % self.index)
        if not lp.exists() and not rp.exists():
            raise EndOfStream(f"no frame pair at index {self.index} in {self.directory}")
        if not lp.exists():
            raise ReadError(f"missing left frame: {lp}")
        if not rp.exists():
            raise ReadError(f"missing right frame: {rp}")
        left = load_image(lp)
        right = load_image(rp)
        _check_pair(left, right, f"frame {self.index}")
        self.index += 1
        return left, flip_180(right)


class SinglePairSource:
    """Exactly one frame pair from two image files."""

    def __init__(self, left_path, right_path) -> None:
        self.left_path = Path(left_path)
        self.right_path = Path(right_path)
        self._done = False

    def next_pair(self) -> tuple[np.ndarray, np.ndarray]:
        if self._done:
            raise EndOfStream("single pair already delivered")
        for p in (self.left_path, self.right_path):
            if not p.exists():
                raise ReadError(f"missing frame: {p}")
        left = load_image(self.left_path)
        right = load_image(self.right_path)
        _check_pair(left, right, "single pair")
        self._done = True
        return left, flip_180(right)


class SyntheticSource:
    """Deterministic checkerboard pattern frames, no files needed.

    The raw (pre-flip) content of frame ``i`` is exposed through
    :meth:`raw_pair`; ``next_pair`` applies the same right-frame flip as
    the file sources.
    """

    def __init__(self, width: int, height: int, count: int | None = None, cell: int = 32) -> None:
        if width <= 0 or height <= 0:
            raise ValueError("frame dimensions must be positive")
        if cell <= 0:
            raise ValueError("cell size must be positive")
        self.width = width
        self.height = height
        self.count = count
        self.cell = cell
        self.index = 0

    def raw_pair(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        """Frame pair content as captured, before the right-camera flip."""
        ys, xs = np.mgrid[0 : self.height, 0 : self.width]
        phase = index % self.cell
        mask = (((xs + phase) // self.cell) + (ys // self.cell)) % 2 == 0
        base = np.where(mask, 220, 60).astype(np.uint8)
        left = np.stack([base, base, np.full_like(base, 90)], axis=-1)
        right = np.stack([np.full_like(base, 90), base, base], axis=-1)
        # corner marker makes the flip visible
        m = max(2, self.cell // 4)
        left[:m, :m] = (255, 0, 0)
        right[:m, :m] = (255, 0, 0)
        alpha = np.full((self.height, self.width, 1), 255, dtype=np.uint8)
        return (
            np.concatenate([left, alpha], axis=2),
            np.concatenate([right, alpha], axis=2),
        )

    def next_pair(self) -> tuple[np.ndarray, np.ndarray]:
        if self.count is not None and self.index >= self.count:
            raise EndOfStream(f"synthetic source exhausted after {self.count} frames")
        left, right = self.raw_pair(self.index)
        self.index += 1
        return left, flip_180(right)


@dataclass(frozen=True)
class CaptureConfig:
    """Capture section of a scene config."""

    kind: str = "synthetic"
    width: int = 752
    height: int = 480
    count: int = 1
    directory: str | None = None
    left: str | None = None
    right: str | None = None


def open_source(cfg: CaptureConfig, base_dir) -> FilePairSource | SinglePairSource | SyntheticSource:
    """Instantiate the frame source described by a capture config."""
    base = Path(base_dir)
    if cfg.kind == "synthetic":
        return SyntheticSource(cfg.width, cfg.height, count=cfg.count)
    if cfg.kind == "files":
        if cfg.directory is None:
            raise ReadError("capture.kind 'files' requires capture.directory")
        return FilePairSource(base / cfg.directory)
    if cfg.kind == "pair":
        if cfg.left is None or cfg.right is None:
            raise ReadError("capture.kind 'pair' requires capture.left and capture.right")
        return SinglePairSource(base / cfg.left, base / cfg.right)
    raise ReadError(f"unknown capture kind {cfg.kind!r}")


class FrameMailbox:
    """Latest-value handoff of matched frame pairs between threads.

    ``deposit`` atomically replaces the stored pair (last writer wins,
    dropped frames are by design); ``read_latest`` returns the newest pair
    with its deposit sequence number and never blocks producers for long.
    Readers can never observe a torn pair: both frames always come from
    the same deposit.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._left: np.ndarray | None = None
        self._right: np.ndarray | None = None
        self._seq = 0

    def deposit(self, left: np.ndarray, right: np.ndarray) -> int:
        """Store a matched pair; returns its sequence number (from 1)."""
        with self._lock:
            self._seq += 1
            self._left = left
            self._right = right
            return self._seq

    def read_latest(self) -> tuple[np.ndarray, np.ndarray, int]:
        """Newest (left, right, seq); raises before the first deposit."""
        with self._lock:
            if self._seq == 0:
                raise ReadBeforeFirstDeposit("mailbox read before any deposit")
            assert self._left is not None and self._right is not None
            return self._left, self._right, self._seq
