"""Datasets: synthetic subspace-union generation, PGM image folders,
block-average downsampling and matrix serialization.

Binary matrix format ("LRMX"):
    bytes 0-3   magic  b"LRMX"
    byte  4     format version (1)
    bytes 5-12  rows, unsigned 64-bit little-endian
    bytes 13-20 cols, unsigned 64-bit little-endian
    bytes 21-   rows*cols IEEE-754 doubles, little-endian, row-major

CSV matrix format: first line "rows,cols", then one line per row with
full-precision decimal values.
"""

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, MatrixFormatError
from .graph import normalize_columns

MAGIC = b"LRMX"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBQQ")
# Refuse dimensions whose payload could not possibly fit in memory.
_MAX_ELEMENTS = 1 << 40


@dataclass
class Dataset:
    """A column-major sample matrix with per-column labels.

    X is d x n, labels has length n.  corrupted_mask (optional) records
    which columns were synthetically corrupted; sample_ids (optional)
    carries file names for directory-loaded data.
    """

    X: np.ndarray
    labels: np.ndarray
    corrupted_mask: np.ndarray | None = None
    meta: str = ""
    sample_ids: list | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.labels = np.asarray(self.labels)
        if self.X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {self.X.shape}")
        if self.labels.shape != (self.X.shape[1],):
            raise DataError(
                f"labels length {self.labels.shape} does not match {self.X.shape[1]} columns"
            )
        if self.labels.size == 0:
            raise DataError("dataset has no samples")
        if self.corrupted_mask is not None:
            self.corrupted_mask = np.asarray(self.corrupted_mask, dtype=bool)
            if self.corrupted_mask.shape != self.labels.shape:
                raise DataError("corrupted_mask length does not match sample count")

    @property
    def n_samples(self):
        return self.X.shape[1]

    @property
    def classes(self):
        return np.unique(self.labels)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for the union-of-subspaces generator."""

    num_classes: int = 3
    ambient_dim: int = 50
    subspace_dim: int = 4
    samples_per_class: int = 30
    corruption_fraction: float = 0.2
    corruption_magnitude: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if not 0 < self.subspace_dim < self.ambient_dim:
            raise ValueError("need 0 < subspace_dim < ambient_dim")
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")
        if not 0.0 <= self.corruption_fraction <= 1.0:
            raise ValueError("corruption_fraction must lie in [0, 1]")
        if self.corruption_magnitude <= 0.0:
            raise ValueError("corruption_magnitude must be > 0")


# Relative weight of the class-specific coefficient in gen_synthetic.  Small
# values mimic image data, where a dominant shared appearance masks identity
# for raw pixel distances while the subspace coordinates stay separable.
CLASS_CONTRAST = 0.22


def gen_synthetic(spec):
    """Draw unit-norm samples from one r-dimensional subspace per class,
    then corrupt a fraction of the columns by adding a scaled random
    direction.

    Every class subspace is spanned by a shared appearance block of r - 1
    orthonormal directions plus one class-specific direction, all drawn
    once per dataset.  Samples are basis @ coefficients, column-normalized;
    shared coefficients are uniform on [0, 1] and the class-specific one is
    CLASS_CONTRAST * uniform[0.5, 1].  Nonnegative coefficients keep each
    class inside a convex cone (so classes are linearly separable), and the
    small specific weight reproduces the image-domain regime where samples
    of different classes look mostly alike.  Exactly
    ceil(corruption_fraction * n) columns, chosen uniformly, receive
    clean + corruption_magnitude * (random unit vector).  Fully determined
    by spec.seed.
    """
    rng = np.random.default_rng(spec.seed)
    d, r, k = spec.ambient_dim, spec.subspace_dim, spec.num_classes
    if (r - 1) + k > d:
        raise ValueError(
            f"need ambient_dim >= subspace_dim - 1 + num_classes, got "
            f"{d} < {r - 1} + {k}"
        )
    Q, _ = np.linalg.qr(rng.standard_normal((d, (r - 1) + k)))
    shared, specific = Q[:, : r - 1], Q[:, r - 1 :]
    blocks = []
    for c in range(k):
        basis = np.column_stack([shared, specific[:, c]])
        coeffs = np.vstack(
            [
                rng.uniform(0.0, 1.0, size=(r - 1, spec.samples_per_class)),
                CLASS_CONTRAST * rng.uniform(0.5, 1.0, size=(1, spec.samples_per_class)),
            ]
        )
        blocks.append(normalize_columns(basis @ coeffs))
    labels = np.repeat(np.arange(spec.num_classes), spec.samples_per_class)
    n = X.shape[1]
    mask = np.zeros(n, dtype=bool)
    n_corrupt = math.ceil(spec.corruption_fraction * n)
    if n_corrupt > 0:
        idx = rng.choice(n, size=n_corrupt, replace=False)
        U = rng.standard_normal((d, n_corrupt))
        U /= np.linalg.norm(U, axis=0)
        X[:, idx] += spec.corruption_magnitude * U
        mask[idx] = True
    meta = (
        f"synthetic(classes={spec.num_classes}, d={d}, r={r}, "
        f"per_class={spec.samples_per_class}, corruption={spec.corruption_fraction}"
        f"@{spec.corruption_magnitude}, seed={spec.seed})"
    )
    return Dataset(X, labels, corrupted_mask=mask, meta=meta)


def occlude_blocks(X, image_shape, fraction, block_fraction=0.2, fill=0.0, seed=0):
    """Occlude a random rectangle in a fraction of the (vectorized) images.

    Each chosen column is reshaped to image_shape (column-major), a block
    covering roughly block_fraction of the area is overwritten with fill
    (a constant, or per-pixel uniform noise when fill="noise"), and the
    column is written back.  Returns (corrupted copy, boolean column mask).
    """
    X = np.array(X, dtype=float)
    h, w = image_shape
    if h * w != X.shape[0]:
        raise ValueError(f"image_shape {image_shape} does not match {X.shape[0]} rows")
    if not 0.0 <= fraction <= 1.0 or not 0.0 < block_fraction <= 1.0:
        raise ValueError("fraction must be in [0,1] and block_fraction in (0,1]")
    rng = np.random.default_rng(seed)
    n = X.shape[1]
    n_occ = math.ceil(fraction * n)
    mask = np.zeros(n, dtype=bool)
    if n_occ == 0:
        return X, mask
    cols = rng.choice(n, size=n_occ, replace=False)
    bh = min(h, max(1, round(h * math.sqrt(block_fraction))))
    bw = min(w, max(1, round(w * math.sqrt(block_fraction))))
    for j in cols:
        top = int(rng.integers(0, h - bh + 1))
        left = int(rng.integers(0, w - bw + 1))
        img = X[:, j].reshape(h, w, order="F")
        if fill == "noise":
            img[top : top + bh, left : left + bw] = rng.uniform(size=(bh, bw))
        else:
            img[top : top + bh, left : left + bw] = float(fill)
        X[:, j] = img.ravel(order="F")
    mask[cols] = True
    return X, mask


def _read_pgm(path):
    """Read a binary (P5) 8-bit PGM file into a float array in [0, 1]."""
    path = Path(path)
    data = path.read_bytes()

    pos = 0
    tokens = []
    while len(tokens) < 4:
        if pos >= len(data):
            raise DataError(f"{path}: truncated PGM header")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise DataError(f"{path}: not a binary PGM (P5) file, magic {tokens[0]!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DataError(f"{path}: non-numeric PGM header fields") from None
    if width < 1 or height < 1:
        raise DataError(f"{path}: bad image dimensions {width}x{height}")
    if not 0 < maxval < 256:
        raise DataError(f"{path}: only 8-bit PGM supported, maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    need = width * height
    if len(data) - pos < need:
        raise DataError(
            f"{path}: truncated pixel data, need {need} bytes, have {len(data) - pos}"
        )
    img = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    return img.reshape(height, width).astype(float) / maxval


def block_downsample(img, factor):
    """Average non-overlapping factor x factor blocks of a 2-D image.

    Edge rows/columns that do not fill a whole block are dropped.  The mean
    pixel value is preserved when both dimensions divide evenly.
    """
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a 2-D image")
    k = int(factor)
    if k != factor or k < 1:
        raise ValueError(f"downsampling factor must be a positive integer, got {factor}")
    if k == 1:
        return img.copy()
    h, w = img.shape[0] // k, img.shape[1] // k
    if h == 0 or w == 0:
        raise ValueError(f"image {img.shape} too small for factor {k}")
    return img[: h * k, : w * k].reshape(h, k, w, k).mean(axis=(1, 3))


def parse_rate(rate):
    """Turn 1, 0.25 or "1/4" into the integer block-averaging factor."""
    if isinstance(rate, str):
        if "/" in rate:
            num, den = rate.split("/", 1)
            rate = float(num) / float(den)
        else:
            rate = float(rate)
    rate = float(rate)
    if rate <= 0.0 or rate > 1.0:
        raise ValueError(f"downsample rate must lie in (0, 1], got {rate}")
    k = round(1.0 / rate)
    if abs(k * rate - 1.0) > 1e-9:
        raise ValueError(f"downsample rate must be the reciprocal of an integer, got {rate}")
    return k


def load_image_dir(root, downsample_rate=1.0):
    """Load a directory of grayscale PGM images, one subdirectory per class.

    Every image must share the same dimensions.  Each image is block-average
    downsampled, scaled to [0, 1] and vectorized column-major into one
    column of X; labels are the subdirectory names.
    """
    root = Path(root)
    factor = parse_rate(downsample_rate)
    if not root.is_dir():
        raise DataError(f"{root}: not a directory")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise DataError(f"{root}: no class subdirectories found")
    cols, labels, ids = [], [], []
    shape = None
    for cdir in class_dirs:
        files = sorted(p for p in cdir.iterdir() if p.suffix.lower() == ".pgm")
        if not files:
            raise DataError(f"{cdir}: class directory contains no .pgm files")
        for f in files:
            img = _read_pgm(f)
            if shape is None:
                shape = img.shape
            elif img.shape != shape:
                raise DataError(
                    f"{f}: image size {img.shape[0]}x{img.shape[1]} differs from "
                    f"{shape[0]}x{shape[1]}"
                )
            small = block_downsample(img, factor)
            cols.append(small.ravel(order="F"))
            labels.append(cdir.name)
            ids.append(f"{cdir.name}/{f.name}")
    X = np.stack(cols, axis=1)
    meta = f"dir({root}, rate=1/{factor}, image={shape[0]}x{shape[1]})"
    return Dataset(X, np.array(labels), meta=meta, sample_ids=ids)


def split_train_test(ds, per_class_train, seed=0):
    """Per class, draw per_class_train columns (seeded, without replacement)
    for training; the remainder becomes the test set.

    Column order within each split follows the original dataset order.
    """
    if per_class_train < 1:
        raise DataError(f"per_class_train must be >= 1, got {per_class_train}")
    rng = np.random.default_rng(seed)
    train_idx = []
    for c in np.unique(ds.labels):
        idx = np.flatnonzero(ds.labels == c)
        if idx.size <= per_class_train:
            raise DataError(
                f"class {c!r} has {idx.size} samples; need more than {per_class_train}"
            )
        train_idx.append(rng.choice(idx, size=per_class_train, replace=False))
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.setdiff1d(np.arange(ds.n_samples), train_idx)

    def take(idx, tag):
        return Dataset(
            ds.X[:, idx],
            ds.labels[idx],
            corrupted_mask=None if ds.corrupted_mask is None else ds.corrupted_mask[idx],
            meta=f"{ds.meta} [{tag}]",
            sample_ids=None if ds.sample_ids is None else [ds.sample_ids[i] for i in idx],
        )

    return take(train_idx, "train"), take(test_idx, "test")


def save_matrix(M, path, fmt=None):
    """Write a matrix to path in the binary LRMX format or as CSV.

    fmt is "binary", "csv" or None (infer from the suffix: .csv means CSV).
    """
    M = np.ascontiguousarray(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "binary"
    if fmt == "binary":
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, M.shape[0], M.shape[1])
        path.write_bytes(header + M.astype("<f8").tobytes(order="C"))
    elif fmt == "csv":
        lines = [f"{M.shape[0]},{M.shape[1]}"]
        lines.extend(",".join(repr(float(v)) for v in row) for row in M)
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")
    return path


def _load_matrix_binary(data):
    if len(data) < _HEADER.size:
        raise MatrixFormatError(
            f"file too short for header, {len(data)} bytes", offset=len(data)
        )
    magic, version, rows, cols = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise MatrixFormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != FORMAT_VERSION:
        raise MatrixFormatError(f"unsupported format version {version}", offset=4)
    if rows == 0 or cols == 0:
        raise MatrixFormatError(f"zero dimension {rows}x{cols}", offset=5)
    if rows > _MAX_ELEMENTS or cols > _MAX_ELEMENTS or rows * cols > _MAX_ELEMENTS:
        raise MatrixFormatError(f"dimension overflow {rows}x{cols}", offset=5)
    expected = rows * cols * 8
    have = len(data) - _HEADER.size
    if have < expected:
        raise MatrixFormatError(
            f"truncated payload, need {expected} bytes, have {have}",
            offset=_HEADER.size + have,
        )
    if have > expected:
        raise MatrixFormatError(
            f"{have - expected} trailing bytes after payload",
            offset=_HEADER.size + expected,
        )
    arr = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=_HEADER.size)
    return arr.reshape(rows, cols).astype(float)


def _load_matrix_csv(path):
    lines = path.read_text().splitlines()
    if not lines:
        raise MatrixFormatError(f"{path}: empty CSV matrix file")
    try:
        rows, cols = (int(v) for v in lines[0].split(","))
    except ValueError:
        raise MatrixFormatError(f"{path}: bad CSV header line {lines[0]!r}") from None
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != rows:
        raise MatrixFormatError(f"{path}: expected {rows} data rows, found {len(body)}")
    M = np.empty((rows, cols))
    for i, ln in enumerate(body):
        parts = ln.split(",")
        if len(parts) != cols:
            raise MatrixFormatError(
                f"{path}: row {i + 1} has {len(parts)} values, expected {cols}"
            )
        try:
            M[i] = [float(v) for v in parts]
        except ValueError:
            raise MatrixFormatError(f"{path}: non-numeric value in row {i + 1}") from None
    return M


def load_matrix(path):
    """Read a matrix written by save_matrix; the format is sniffed."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == MAGIC:
        return _load_matrix_binary(data)
    return _load_matrix_csv(path)
