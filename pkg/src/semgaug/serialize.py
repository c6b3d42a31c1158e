"""Binary model container: magic, version, JSON meta block, parameter manifest,
float32 parameter buffer. Shared by the encoder and denoiser file formats."""

import json

import numpy as np

from .errors import BadMagicError, ShapeMismatchError, TruncatedPayloadError

VERSION = 1


def write_model(path, magic: bytes, meta: dict, params: dict):
    names = sorted(params)
    manifest = bytearray()
    manifest += np.array([len(names)], dtype="<u4").tobytes()
    offset = 0
    buffers = []
    for name in names:
        arr = np.ascontiguousarray(params[name], dtype="<f4")
        raw = name.encode()
        manifest += np.array([len(raw)], dtype="<u2").tobytes()
        manifest += raw
        manifest += np.array([offset, arr.size], dtype="<u8").tobytes()
        manifest += np.array([arr.ndim], dtype="<u1").tobytes()
        manifest += np.array(arr.shape, dtype="<u4").tobytes()
        buffers.append(arr.tobytes())
        offset += arr.size
    meta_raw = json.dumps(meta, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(np.array([VERSION], dtype="<u4").tobytes())
        fh.write(np.array([len(meta_raw)], dtype="<u4").tobytes())
        fh.write(meta_raw)
        fh.write(np.array([len(manifest)], dtype="<u4").tobytes())
        fh.write(bytes(manifest))
        for buf in buffers:
            fh.write(buf)


def read_model(path, magic: bytes):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(magic)] != magic:
        raise BadMagicError(f"bad magic {blob[:len(magic)]!r}, expected {magic!r}")
    off = len(magic)

    def take(n, what):
        nonlocal off
        if off + n > len(blob):
            raise TruncatedPayloadError(f"truncated payload while reading {what}")
        chunk = blob[off : off + n]
        off += n
        return chunk

    version = int(np.frombuffer(take(4, "version"), "<u4")[0])
    if version != VERSION:
        raise ShapeMismatchError(f"unsupported model version {version}")
    meta_len = int(np.frombuffer(take(4, "meta length"), "<u4")[0])
    meta = json.loads(take(meta_len, "meta block").decode())
    man_len = int(np.frombuffer(take(4, "manifest length"), "<u4")[0])
    man = take(man_len, "manifest")
    mo = 0
    count = int(np.frombuffer(man, "<u4", count=1, offset=mo)[0])
    mo += 4
    entries = []
    for _ in range(count):
        nlen = int(np.frombuffer(man, "<u2", count=1, offset=mo)[0])
        mo += 2
        name = man[mo : mo + nlen].decode()
        mo += nlen
        p_off, size = (int(v) for v in np.frombuffer(man, "<u8", count=2, offset=mo))
        mo += 16
        ndim = int(np.frombuffer(man, "<u1", count=1, offset=mo)[0])
        mo += 1
        shape = tuple(int(v) for v in np.frombuffer(man, "<u4", count=ndim, offset=mo))
        mo += 4 * ndim
        entries.append((name, p_off, size, shape))
    params = {}
    for name, p_off, size, shape in entries:
        raw = take(4 * size, f"parameter {name}")
        arr = np.frombuffer(raw, "<f4").reshape(shape)
        if int(np.prod(shape)) != size:
            raise ShapeMismatchError(f"manifest shape mismatch for {name}")
        params[name] = arr.copy()
    return meta, params
