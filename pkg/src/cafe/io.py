"""Binary PPM/PGM images, model checkpoints and CSV reports."""

from __future__ import annotations

import csv
import io
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import encodings as enc
from . import tensor as T
from .errors import FormatError, ShapeError, VersionError
from .model import CafeModel, ModelSpec

MAGIC = b"CAFE"
VERSION = 1


@dataclass
class ImageGrid:
    """Image with values in [0, 1], stored as (height, width, channels)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 2:
            v = v[:, :, None]
        if v.ndim != 3 or v.shape[2] not in (1, 3):
            raise ShapeError(f"image must be (H, W, 1|3), got {v.shape}")
        self.values = np.clip(v, 0.0, 1.0)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    def flat(self) -> np.ndarray:
        """Row-major (H*W, C) targets aligned with :func:`make_coord_grid`."""
        return self.values.reshape(-1, self.channels)


def atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# PPM


def _header_tokens(buf: bytes) -> tuple[list[bytes], int]:
    """Magic, width, height, maxval and the offset of the first pixel byte."""
    tokens: list[bytes] = []
    i = 0
    n = len(buf)
    while len(tokens) < 4:
        while i < n and buf[i:i + 1].isspace():
            i += 1
        if i < n and buf[i:i + 1] == b"#":
            while i < n and buf[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not buf[i:i + 1].isspace() and buf[i:i + 1] != b"#":
            i += 1
        if start == i:
            raise FormatError("truncated PPM header")
        tokens.append(buf[start:i])
    if i >= n or not buf[i:i + 1].isspace():
        raise FormatError("PPM header must end with a single whitespace byte")
    return tokens, i + 1


def decode_ppm(buf: bytes) -> ImageGrid:
    tokens, offset = _header_tokens(buf)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"unsupported magic {magic!r}; expected binary P5 or P6")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError(f"malformed PPM header {tokens!r}") from None
    if width < 1 or height < 1:
        raise FormatError(f"invalid image size {width}x{height}")
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}; only 255 is supported")
    channels = 1 if magic == b"P5" else 3
    need = width * height * channels
    payload = buf[offset:offset + need]
    if len(payload) < need:
        raise FormatError(f"truncated PPM payload: {len(payload)} of {need} bytes")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return ImageGrid(pixels / 255.0)


def encode_ppm(image: ImageGrid) -> bytes:
    magic = b"P5" if image.channels == 1 else b"P6"
    # round half up
    q = np.floor(np.clip(image.values, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    header = magic + f"\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + q.tobytes()


def load_ppm(path) -> ImageGrid:
    return decode_ppm(Path(path).read_bytes())


def save_ppm(image: ImageGrid, path) -> None:
    atomic_write_bytes(path, encode_ppm(image))


# ---------------------------------------------------------------------------
# checkpoints
#
# "CAFE", version byte, then little-endian: u32 D, M, J, N, D_h, L_mlp, out_dim;
# u64 seed; f64 scale; omega (M x D, f64 row-major); then every parameter as
# u32 rank, u32 dims..., f64 data, in model.parameters() order.


def encode_checkpoint(model: CafeModel) -> bytes:
    spec = model.spec
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(bytes([VERSION]))
    out.write(struct.pack("<7I", model.D, model.basis.M, spec.J, model.N, spec.D_h,
                          spec.L_mlp, spec.out_dim))
    out.write(struct.pack("<Q", spec.seed))
    out.write(struct.pack("<d", spec.scale))
    out.write(np.ascontiguousarray(model.basis.omega, dtype="<f8").tobytes())
    for p in model.parameters():
        out.write(struct.pack("<I", p.data.ndim))
        out.write(struct.pack(f"<{p.data.ndim}I", *p.shape))
        out.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
    return out.getvalue()


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated checkpoint at byte {self.pos} (wanted {n} more)")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, shape) -> np.ndarray:
        n = int(np.prod(shape))
        return np.frombuffer(self.take(8 * n), dtype="<f8").astype(np.float64).reshape(shape)


def decode_checkpoint(buf: bytes) -> CafeModel:
    r = _Reader(buf)
    if r.take(4) != MAGIC:
        raise FormatError("not a CAFE checkpoint (bad magic)")
    version = r.take(1)[0]
    if version != VERSION:
        raise VersionError(f"checkpoint version {version} is not supported (reader is version {VERSION})")
    D, M, J, N, D_h, L_mlp, out_dim = r.unpack("<7I")
    (seed,) = r.unpack("<Q")
    (scale,) = r.unpack("<d")
    omega = r.floats((M, D))
    if N > 0:
        encoder = "cafeplus" if J > 0 else "cafe"
    else:
        encoder = "chebyshev" if J > 0 else "rff"
    spec = ModelSpec(encoder=encoder, D=D, M=M, J=J, N=N, D_h=D_h, L_mlp=L_mlp,
                     out_dim=out_dim, scale=scale if scale > 0 else 1.0, seed=seed)
    basis = enc.FrequencyBasis(omega, kind="explicit", scale=scale, seed=seed)
    arrays = []
    for _ in range(2 * N + 2 * (L_mlp + 1)):
        (rank,) = r.unpack("<I")
        shape = r.unpack(f"<{rank}I")
        arrays.append(r.floats(shape))
    if r.pos != len(buf):
        raise FormatError(f"{len(buf) - r.pos} trailing bytes after checkpoint")
    stack = [(T.Tensor(arrays[2 * i], True), T.Tensor(arrays[2 * i + 1], True)) for i in range(N)]
    rest = arrays[2 * N:]
    mlp = [(T.Tensor(rest[2 * i], True), T.Tensor(rest[2 * i + 1], True)) for i in range(L_mlp + 1)]
    model = CafeModel(spec, basis, stack, mlp)
    expected_in = D_h if N > 0 else 2 * M + D * J
    if (N and stack[0][0].shape != (D_h, 2 * M + D * J)) or mlp[0][0].shape[1] != expected_in:
        raise FormatError("checkpoint parameter shapes do not match its header")
    return model


def checkpoint_save(model: CafeModel, path) -> None:
    atomic_write_bytes(path, encode_checkpoint(model))


def checkpoint_load(path) -> CafeModel:
    return decode_checkpoint(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# CSV


REPORT_COLUMNS = ("run_id", "task", "encoder", "N", "M", "J", "D_h", "params", "iters",
                  "seed", "final_psnr_or_iou", "seconds")


def csv_bytes(rows, columns) -> bytes:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([row[c] for c in columns] if isinstance(row, dict) else list(row))
    return buf.getvalue().encode("utf-8")


def write_csv(path, rows, columns=REPORT_COLUMNS) -> None:
    atomic_write_bytes(path, csv_bytes(rows, columns))
