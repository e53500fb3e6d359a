"""Load grayscale image corpora as matrices.

Sources are binary (P5) or ASCII (P2) PGM files, or CSV grids of pixel
values. Each image is scaled to the 0..255 range, resized bilinearly to a
common size and divided by 255. A manifest CSV with header
``path,label[,v1,v2,...]`` lists the images; relative paths are resolved
against the manifest's directory.
"""
import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import CorpusLoadError, InvalidTarget, MalformedFile, OutOfRange, UnsupportedFormat

DEFAULT_SIZE = (150, 150)


def _pgm_tokens(data, count):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset just past the last one.
    """
    tokens = []
    i = 2
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i >= n:
            raise MalformedFile("truncated PGM header")
        if data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace() and data[i : i + 1] != b"#":
            i += 1
        tokens.append(data[start:i])
    return tokens, i


def decode_pgm(data):
    """Pixels of a P2/P5 PGM as float64, rescaled to 0..255 when maxval differs from 255."""
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise UnsupportedFormat(f"not a grayscale PGM (magic {magic!r})")
    try:
        tokens, end = _pgm_tokens(data, 3)
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise MalformedFile("non-numeric PGM header") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise MalformedFile(f"bad PGM dimensions or maxval: {width}x{height}, maxval {maxval}")
    count = width * height
    if magic == b"P5":
        if end >= len(data) or not data[end : end + 1].isspace():
            raise MalformedFile("missing whitespace after PGM header")
        raster = data[end + 1 :]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(raster) < count * dtype.itemsize:
            raise MalformedFile("truncated PGM raster")
        pixels = np.frombuffer(raster, dtype=dtype, count=count).astype(np.float64)
    else:
        try:
            pixels = np.array([int(t) for t in data[end:].split()], dtype=np.float64)
        except ValueError:
            raise MalformedFile("non-numeric ASCII PGM pixel") from None
        if pixels.size < count:
            raise MalformedFile("truncated ASCII PGM raster")
        pixels = pixels[:count]
    if np.any(pixels > maxval):
        raise MalformedFile("pixel value exceeds maxval")
    img = pixels.reshape(height, width)
    if maxval != 255:
        img = img * (255.0 / maxval)
    return img


def decode_csv_grid(text):
    rows = []
    for lineno, row in enumerate(csv.reader(text.splitlines()), 1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            rows.append([float(c) for c in row])
        except ValueError:
            raise MalformedFile(f"line {lineno}: non-numeric value") from None
    if not rows:
        raise MalformedFile("empty CSV grid")
    if len({len(r) for r in rows}) != 1:
        raise MalformedFile("CSV grid rows differ in length")
    grid = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(grid)):
        raise MalformedFile("CSV grid has non-finite values")
    return grid


def load_grayscale(path):
    """Pixel matrix (row = image row) with values on the 0..255 scale."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] in (b"P2", b"P5"):
        return decode_pgm(data)
    if data[:1] == b"P" and data[1:2].isdigit():
        raise UnsupportedFormat(f"{path}: only grayscale PGM (P2/P5) is supported")
    if str(path).lower().endswith(".csv"):
        try:
            return decode_csv_grid(data.decode("utf-8"))
        except UnicodeDecodeError:
            raise MalformedFile(f"{path}: CSV grid is not UTF-8 text") from None
    raise UnsupportedFormat(f"{path}: expected a .pgm (P2/P5) or .csv grid")


def normalize_pixels(M):
    M = np.asarray(M, dtype=np.float64)
    if np.any(M < 0) or np.any(M > 255):
        raise OutOfRange("pixel values must lie in [0, 255]")
    return M / 255.0


def _axis_weights(src, dst):
    # corner-aligned: target 0 and dst-1 sit exactly on source 0 and src-1
    if dst == 1:
        pos = np.array([(src - 1) / 2.0])
    else:
        pos = np.arange(dst) * (src - 1) / (dst - 1)
    lo = np.clip(np.floor(pos).astype(np.int64), 0, max(src - 2, 0))
    hi = np.minimum(lo + 1, src - 1)
    t = pos - lo
    return lo, hi, t


def resize_bilinear(M, height, width):
    """Bilinear resampling on a corner-aligned grid."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise InvalidTarget("source must be a non-empty matrix")
    if int(height) < 1 or int(width) < 1:
        raise InvalidTarget(f"target size must be positive, got {height}x{width}")
    if M.shape == (height, width):
        return M.copy()
    lo, hi, t = _axis_weights(M.shape[0], int(height))
    a, b = M[lo, :], M[hi, :]
    rows = a + t[:, None] * (b - a)
    lo, hi, t = _axis_weights(M.shape[1], int(width))
    a, b = rows[:, lo], rows[:, hi]
    return a + t[None, :] * (b - a)


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: float
    covariates: tuple = ()


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple
    target_height: int = DEFAULT_SIZE[0]
    target_width: int = DEFAULT_SIZE[1]
    covariate_names: tuple = field(default=())

    def __post_init__(self):
        if not self.entries:
            raise MalformedFile("manifest has no entries")
        if len({len(e.covariates) for e in self.entries}) != 1:
            raise MalformedFile("manifest rows have different numbers of covariates")


def read_manifest(path, target_size=DEFAULT_SIZE):
    base = os.path.dirname(os.path.abspath(path))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MalformedFile(f"{path}: empty manifest") from None
        if header[:2] != ["path", "label"]:
            raise MalformedFile(f"{path}: header must start with path,label")
        entries = []
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise MalformedFile(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                label = float(row[1])
                cov = tuple(float(c) for c in row[2:])
            except ValueError:
                raise MalformedFile(f"{path}:{lineno}: non-numeric label or covariate") from None
            p = row[0].strip()
            entries.append(ManifestEntry(p if os.path.isabs(p) else os.path.join(base, p), label, cov))
    return CorpusManifest(tuple(entries), int(target_size[0]), int(target_size[1]), tuple(header[2:]))


def preprocess(M, height, width):
    return normalize_pixels(resize_bilinear(M, height, width))


def load_corpus(manifest):
    """Load every manifest entry; the first failure aborts with its index and path."""
    h, w = manifest.target_height, manifest.target_width
    X = np.empty((len(manifest.entries), h, w))
    for i, entry in enumerate(manifest.entries):
        try:
            X[i] = preprocess(load_grayscale(entry.path), h, w)
        except (OSError, ValueError) as exc:
            raise CorpusLoadError(i, entry.path, exc) from exc
    y = np.array([e.label for e in manifest.entries], dtype=np.float64)
    v = None
    if manifest.entries[0].covariates:
        v = np.array([e.covariates for e in manifest.entries], dtype=np.float64)
    return Dataset(X, y, v, None, tuple(e.path for e in manifest.entries))


def encode_pgm(M, binary=True, maxval=255):
    """PGM bytes for an integer-valued matrix (used for fixtures and synthetic corpora)."""
    M = np.asarray(M)
    height, width = M.shape
    pix = np.rint(M).astype(np.int64)
    if np.any(pix < 0) or np.any(pix > maxval):
        raise OutOfRange("pixel values outside [0, maxval]")
    if binary:
        dtype = ">u2" if maxval > 255 else "u1"
        return f"P5\n{width} {height}\n{maxval}\n".encode("ascii") + pix.astype(dtype).tobytes()
    body = "\n".join(" ".join(str(int(x)) for x in row) for row in pix)
    return f"P2\n{width} {height}\n{maxval}\n{body}\n".encode("ascii")
