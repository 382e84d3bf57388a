"""
Binary codecs and image files

Every header starts with an 8-byte magic carrying the format version digit; all
multi-byte fields are little-endian. Writers go through atomic_write so a failed
command never leaves a partial file behind.
"""

import io
import json
import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from PIL import Image

from src.config.settings import (
    MAGIC_EVENT_IMAGE,
    MAGIC_EVENT_STREAM,
    MAGIC_LIGHTFIELD,
    MAGIC_NETWORK,
    MAGIC_PATTERNS,
    VIEW_GRID,
)
from src.models.events import EVENT_DTYPE, EventImage, EventStream
from src.models.lightfield import AperturePattern, LightField
from src.nn.recnet import ReconNet, load_weights
from src.utils.validators import ArrayValidator, FormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
MAGIC_LEN = 8
INT16_MIN, INT16_MAX = np.iinfo(np.int16).min, np.iinfo(np.int16).max
MAX_U8 = 0xFF
MAX_U16 = 0xFFFF


def atomic_write(path: PathLike, data: bytes) -> None:
    """Write to a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pack(fmt: str, *fields: int, what: str) -> bytes:
    try:
        return struct.pack(fmt, *fields)
    except struct.error as e:
        raise FormatError(f"{what} header cannot hold {fields}: {e}") from e


def _read(path: PathLike) -> bytes:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path} not found")
    return path.read_bytes()


def _split_header(blob: bytes, magic: bytes, fmt: str) -> Tuple[tuple, bytes]:
    size = MAGIC_LEN + struct.calcsize(fmt)
    if len(blob) < size:
        raise FormatError(f"file too short for a {magic.decode()} header")
    ArrayValidator.require_magic(blob[:MAGIC_LEN], magic)
    return struct.unpack(fmt, blob[MAGIC_LEN:size]), blob[size:]


def _payload(body: bytes, dtype: Union[str, np.dtype], count: int, what: str) -> np.ndarray:
    expected = np.dtype(dtype).itemsize * count
    if len(body) != expected:
        raise FormatError(f"{what}: expected {expected} payload bytes, found {len(body)}")
    return np.frombuffer(body, dtype=dtype, count=count)


# CELF-LF4: u32 W, u32 H, float32 values in (y, x, v, u) order

def encode_lightfield(lf: LightField) -> bytes:
    header = MAGIC_LIGHTFIELD + _pack("<II", lf.width, lf.height, what="light field")
    return header + lf.values.astype("<f4").tobytes()


def decode_lightfield(blob: bytes) -> LightField:
    (width, height), body = _split_header(blob, MAGIC_LIGHTFIELD, "<II")
    count = width * height * VIEW_GRID * VIEW_GRID
    values = _payload(body, "<f4", count, "light field").astype(np.float64)
    return LightField(values=values.reshape(height, width, VIEW_GRID, VIEW_GRID))


def write_lightfield(path: PathLike, lf: LightField) -> None:
    atomic_write(path, encode_lightfield(lf))


def read_lightfield(path: PathLike) -> LightField:
    return decode_lightfield(_read(path))


# CELF-EV1: u16 W, u16 H, u64 count, records (u16 x, u16 y, u32 t, i8 p)

def encode_stream(stream: EventStream) -> bytes:
    header = MAGIC_EVENT_STREAM + _pack("<HHQ", stream.width, stream.height, len(stream), what="event stream")
    return header + stream.records.astype(EVENT_DTYPE).tobytes()


def decode_stream(blob: bytes) -> EventStream:
    (width, height, count), body = _split_header(blob, MAGIC_EVENT_STREAM, "<HHQ")
    records = _payload(body, EVENT_DTYPE, count, "event stream")
    return EventStream(width=width, height=height, records=records)


def write_stream(path: PathLike, stream: EventStream) -> None:
    atomic_write(path, encode_stream(stream))


def read_stream(path: PathLike) -> EventStream:
    return decode_stream(_read(path))


# CELF-EI1: u16 W, u16 H, u8 transition start index, int16 raster

def encode_event_image(img: EventImage) -> bytes:
    values = img.values
    if values.size and (values.min() < INT16_MIN or values.max() > INT16_MAX):
        raise ValueError("event counts exceed the signed 16-bit range")
    header = MAGIC_EVENT_IMAGE + _pack("<HHB", img.width, img.height, img.transition[0], what="event image")
    return header + values.astype("<i2").tobytes()


def decode_event_image(blob: bytes) -> EventImage:
    (width, height, start), body = _split_header(blob, MAGIC_EVENT_IMAGE, "<HHB")
    values = _payload(body, "<i2", width * height, "event image").astype(np.int64)
    return EventImage(values=values.reshape(height, width), transition=(start, start + 1))


def write_event_image(path: PathLike, img: EventImage) -> None:
    atomic_write(path, encode_event_image(img))


def read_event_image(path: PathLike) -> EventImage:
    return decode_event_image(_read(path))


# CELF-AP1: u32 N, N x 64 float32 in [v, u] order

def encode_patterns(patterns: Sequence[AperturePattern]) -> bytes:
    header = MAGIC_PATTERNS + _pack("<I", len(patterns), what="pattern")
    body = np.stack([p.values for p in patterns]).astype("<f4").tobytes() if patterns else b""
    return header + body


def decode_patterns(blob: bytes) -> List[AperturePattern]:
    (count,), body = _split_header(blob, MAGIC_PATTERNS, "<I")
    values = _payload(body, "<f4", count * VIEW_GRID * VIEW_GRID, "patterns").astype(np.float64)
    grids = values.reshape(count, VIEW_GRID, VIEW_GRID)
    return [AperturePattern(values=g, binary=bool(np.all((g == 0) | (g == 1)))) for g in grids]


def write_patterns(path: PathLike, patterns: Sequence[AperturePattern]) -> None:
    atomic_write(path, encode_patterns(patterns))


def read_patterns(path: PathLike) -> List[AperturePattern]:
    return decode_patterns(_read(path))


# CELF-NN1: u32 layer count, per conv layer u32 C_in, u32 C_out, float32 weights then biases

def encode_network(net: ReconNet) -> bytes:
    convs = net.convs
    chunks = [MAGIC_NETWORK, struct.pack("<I", len(convs))]
    for conv in convs:
        chunks.append(struct.pack("<II", conv.in_channels, conv.out_channels))
        chunks.append(conv.weight.data.astype("<f4").tobytes())
        chunks.append(conv.bias.data.astype("<f4").tobytes())
    return b"".join(chunks)


def decode_network(blob: bytes) -> ReconNet:
    (n_layers,), body = _split_header(blob, MAGIC_NETWORK, "<I")
    widths: List[int] = []
    weights, biases = [], []
    offset = 0
    for _ in range(n_layers):
        if len(body) < offset + 8:
            raise FormatError("truncated network layer header")
        c_in, c_out = struct.unpack_from("<II", body, offset)
        offset += 8
        n_w = c_out * c_in * 9
        end = offset + 4 * (n_w + c_out)
        if len(body) < end:
            raise FormatError("truncated network layer payload")
        w = np.frombuffer(body, dtype="<f4", count=n_w, offset=offset).astype(np.float64)
        b = np.frombuffer(body, dtype="<f4", count=c_out, offset=offset + 4 * n_w).astype(np.float64)
        offset = end
        if widths and widths[-1] != c_in:
            raise FormatError("network layer widths do not chain")
        if not widths:
            widths.append(c_in)
        widths.append(c_out)
        weights.append(w.reshape(c_out, c_in, 3, 3))
        biases.append(b)
    if offset != len(body):
        raise FormatError("trailing bytes after network layers")

    net = ReconNet(widths)
    load_weights(net, weights, biases)
    return net


def write_network(path: PathLike, net: ReconNet) -> None:
    atomic_write(path, encode_network(net))


def read_network(path: PathLike) -> ReconNet:
    net = decode_network(_read(path))
    logger.debug("read network %s with widths %s", path, net.widths)
    return net


# PNG images and light-field directories

def _png_bytes(values: np.ndarray, bit_depth: int) -> bytes:
    clipped = np.clip(values, 0.0, 1.0)
    if bit_depth == 8:
        img = Image.fromarray(np.round(clipped * 255).astype(np.uint8))
    elif bit_depth == 16:
        img = Image.fromarray(np.round(clipped * 65535).astype(np.uint16))
    else:
        raise ValueError(f"unsupported bit depth {bit_depth}")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def write_png(path: PathLike, values: np.ndarray, bit_depth: int = 8) -> None:
    """Grayscale PNG of values in [0, 1]"""
    atomic_write(path, _png_bytes(np.asarray(values, dtype=np.float64), bit_depth))


def read_png(path: PathLike) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path} not found")
    with Image.open(path) as img:
        mode = img.mode
        arr = np.array(img)
    if arr.ndim != 2 or mode not in ("L", "I;16", "I;16B", "I"):
        raise FormatError(f"{path} is not a grayscale image")
    scale = 255.0 if mode == "L" else 65535.0
    return arr.astype(np.float64) / scale


def view_filename(u: int, v: int) -> str:
    return f"view_{u}_{v}.png"


def write_lightfield_dir(directory: PathLike, lf: LightField, bit_depth: int = 8) -> None:
    directory = Path(directory)
    for v in range(VIEW_GRID):
        for u in range(VIEW_GRID):
            write_png(directory / view_filename(u, v), lf.view(u, v), bit_depth)
    meta = {"width": lf.width, "height": lf.height, "bit_depth": bit_depth}
    atomic_write(directory / "meta.json", (json.dumps(meta, sort_keys=True) + "\n").encode())


def read_lightfield_dir(directory: PathLike) -> LightField:
    directory = Path(directory)
    meta_path = directory / "meta.json"
    if not meta_path.is_file():
        raise FileNotFoundError(f"{meta_path} not found")
    meta = json.loads(meta_path.read_text())
    width, height = int(meta["width"]), int(meta["height"])

    values = np.empty((height, width, VIEW_GRID, VIEW_GRID))
    for v in range(VIEW_GRID):
        for u in range(VIEW_GRID):
            view = read_png(directory / view_filename(u, v))
            if view.shape != (height, width):
                raise FormatError(f"view ({u}, {v}) is {view.shape}, meta says {(height, width)}")
            values[:, :, v, u] = view
    return LightField(values=values)


def load_lightfield(path: PathLike) -> LightField:
    """Either a CELF-LF4 file or a directory of view PNGs."""
    path = Path(path)
    if path.is_dir():
        lf4 = path / "lightfield.lf4"
        return read_lightfield(lf4) if lf4.is_file() else read_lightfield_dir(path)
    return read_lightfield(path)


# Datasets: a directory of sample_XXXX/ subdirectories or bare .lf4 files

def sample_dirname(index: int) -> str:
    return f"sample_{index:04d}"


def list_samples(directory: PathLike) -> List[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory} is not a directory")
    samples = sorted(p for p in directory.iterdir() if p.is_dir() and p.name.startswith("sample_"))
    samples += sorted(p for p in directory.glob("*.lf4") if p.is_file())
    if not samples:
        raise FileNotFoundError(f"no light-field samples found in {directory}")
    return samples


def load_dataset(directory: PathLike) -> List[LightField]:
    samples = [load_lightfield(p) for p in list_samples(directory)]
    logger.info("loaded %d samples from %s", len(samples), directory)
    return samples


def write_raw_float(path: PathLike, values: np.ndarray) -> None:
    """Headerless little-endian float32 raster"""
    atomic_write(path, np.asarray(values).astype("<f4").tobytes())
