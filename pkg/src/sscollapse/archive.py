"""Slice archive: one binary file of framed records per run, plus a JSON index.

Binary layout (all little-endian):

    header   : magic b"SSCA", u32 version (= 1)
    record   : u32 frame_length   (bytes that follow, excluding this word)
               f64 u
               f64 lte
               u8  vertex flag
               u32 n              (grid size)
               7 * n * f64        (r, phi, theta, zeta, m, lam, nu)

The JSON index (same stem, ".json") lists the record offsets and u values
together with the run's config echo and the outcome report, and is written
with sorted keys so identical runs produce identical bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .bondi import HorizonReport, RunConfig, RunResult, SliceState
from .errors import MalformedDataError

__all__ = ["write_archive", "read_archive", "read_index", "ArchiveData"]

_MAGIC = b"SSCA"
_VERSION = 1
_FIELDS = ("r", "phi", "theta", "zeta", "m", "lam", "nu")


class ArchiveData:
    """In-memory view of an archived run."""

    def __init__(self, slices, report, config, index):
        self.slices = slices
        self.report = report
        self.config = config
        self.index = index


def _pack_slice(sl: SliceState) -> bytes:
    n = len(sl.r)
    body = struct.pack("<ddBI", sl.u, sl.lte, 1 if sl.vertex else 0, n)
    for name in _FIELDS:
        arr = np.ascontiguousarray(getattr(sl, name), dtype="<f8")
        body += arr.tobytes()
    return struct.pack("<I", len(body)) + body


def write_archive(result: RunResult, path) -> dict:
    """Write the run's slices and index; returns the index dict."""
    path = Path(path)
    offsets = []
    us = []
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<I", _VERSION))
        for sl in result.slices:
            offsets.append(fh.tell())
            us.append(sl.u)
            fh.write(_pack_slice(sl))
    index = {
        "format": "sscollapse-archive",
        "version": _VERSION,
        "n_slices": len(result.slices),
        "offsets": offsets,
        "u_values": us,
        "report": asdict(result.report),
        "config": asdict(result.config),
        "lte_total": result.lte_total,
        "n_steps": result.n_steps,
        "n_rejected": result.n_rejected,
    }
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(index, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return index


def read_index(path) -> dict:
    path = Path(path)
    with open(path.with_suffix(".json")) as fh:
        return json.load(fh)


def read_archive(path) -> ArchiveData:
    path = Path(path)
    index = read_index(path)
    slices = []
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise MalformedDataError(f"{path}: bad magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _VERSION:
            raise MalformedDataError(f"{path}: unsupported version {version}")
        while True:
            head = fh.read(4)
            if not head:
                break
            (frame_len,) = struct.unpack("<I", head)
            body = fh.read(frame_len)
            if len(body) != frame_len:
                raise MalformedDataError(f"{path}: truncated frame")
            u, lte, vertex, n = struct.unpack_from("<ddBI", body, 0)
            off = struct.calcsize("<ddBI")
            need = off + 7 * n * 8
            if len(body) != need:
                raise MalformedDataError(f"{path}: frame length mismatch")
            arrays = {}
            for k, name in enumerate(_FIELDS):
                arrays[name] = np.frombuffer(body, dtype="<f8", count=n,
                                             offset=off + k * n * 8).copy()
            slices.append(SliceState(u=u, lte=lte, vertex=bool(vertex), **arrays))
    report = HorizonReport(**index["report"])
    config = RunConfig(**index["config"])
    return ArchiveData(slices, report, config, index)
