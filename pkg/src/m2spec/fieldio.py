"""Binary field files.

Layout (all integers little-endian u32):

    b"M2SF" | version | header length | header JSON (utf-8) | payload

The header is compact JSON with sorted keys: ``format_version``, ``kind``
(signal, spectrum or covariance), ``d``, ``dims``, ``m`` and, when relevant,
``epsilon`` and ``radii``.  The payload is little-endian float64 pairs
(re, im), row-major over the grid (0-based, axis order 1..d) and then over
the vector or matrix entries.  Covariance payloads run over the lag box in
lexicographic lag order instead of the grid.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"M2SF"
VERSION = 1
KINDS = ("signal", "spectrum", "covariance")


class FieldFileError(ValueError):
    pass


@dataclass
class FieldFile:
    kind: str
    data: np.ndarray
    epsilon: float | None = None
    radii: tuple[int, ...] | None = None

    @property
    def m(self) -> int:
        return self.data.shape[-1]

    @property
    def dims(self) -> tuple[int, ...]:
        if self.kind == "signal":
            return self.data.shape[:-1]
        if self.kind == "spectrum":
            return self.data.shape[:-2]
        return tuple(2 * n + 1 for n in self.radii)

    def header(self) -> dict:
        if self.kind not in KINDS:
            raise FieldFileError(f"unknown kind {self.kind!r}")
        head = {"format_version": VERSION, "kind": self.kind, "d": len(self.dims),
                "dims": [int(n) for n in self.dims], "m": int(self.m)}
        if self.epsilon is not None:
            head["epsilon"] = float(self.epsilon)
        if self.radii is not None:
            head["radii"] = [int(n) for n in self.radii]
        return head

    def to_bytes(self) -> bytes:
        head = json.dumps(self.header(), sort_keys=True, separators=(",", ":")).encode()
        payload = np.ascontiguousarray(self.data, dtype="<c16").tobytes()
        return MAGIC + struct.pack("<II", VERSION, len(head)) + head + payload

    @classmethod
    def from_bytes(cls, raw: bytes) -> "FieldFile":
        if raw[:4] != MAGIC:
            raise FieldFileError("not an M2SF file (bad magic)")
        version, n_head = struct.unpack("<II", raw[4:12])
        if version != VERSION:
            raise FieldFileError(f"unsupported format version {version}")
        head = json.loads(raw[12 : 12 + n_head].decode())
        kind, m = head["kind"], head["m"]
        if kind == "signal":
            shape = tuple(head["dims"]) + (m,)
        elif kind in ("spectrum", "covariance"):
            lead = tuple(head["dims"]) if kind == "spectrum" else (int(np.prod(head["dims"])),)
            shape = lead + (m, m)
        else:
            raise FieldFileError(f"unknown kind {kind!r}")
        payload = raw[12 + n_head :]
        expected = int(np.prod(shape)) * 16
        if len(payload) != expected:
            raise FieldFileError(f"payload has {len(payload)} bytes, expected {expected}")
        data = np.frombuffer(payload, dtype="<c16").reshape(shape).astype(complex)
        radii = tuple(head["radii"]) if "radii" in head else None
        return cls(kind, data, head.get("epsilon"), radii)


def write_field(path: str | Path, ff: FieldFile) -> None:
    Path(path).write_bytes(ff.to_bytes())


def read_field(path: str | Path) -> FieldFile:
    return FieldFile.from_bytes(Path(path).read_bytes())
