"""Content-addressed on-disk cache for trained models, score vectors, HPO
results, and manifests.

Layout: one directory per object kind, filename = hex digest of the cell
key. Each object file embeds a sha256 of its payload, verified on read.
Writers create a temporary file and atomically rename, so concurrent readers
never observe partial objects.
"""

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import models as _models
from .errors import IntegrityError
from .models import Architecture, HyperParams, Model

_KINDS = ("models", "scores", "hpo", "manifests")


def _canon_float(x) -> bytes:
    return struct.pack("<d", float(x))


def hyper_digest(hypers: HyperParams) -> str:
    h = hashlib.sha256()
    h.update(_canon_float(hypers.learning_rate))
    h.update(struct.pack("<II", hypers.batch_size, hypers.epochs))
    h.update(b"\x01" + _canon_float(hypers.clip_norm) if hypers.is_dp else b"\x00")
    if hypers.is_dp:
        h.update(_canon_float(hypers.noise_multiplier))
    return h.hexdigest()


def arch_digest(arch: Architecture) -> str:
    h = hashlib.sha256()
    h.update(arch.kind.encode())
    h.update(struct.pack("<III", arch.dim, arch.classes, arch.hidden_units))
    return h.hexdigest()


def dataset_digest(dataset) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(dataset.ids, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(dataset.labels, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(dataset.features, dtype="<f8").tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class CellKey:
    """Identity of one trained model: what was trained on what, and how."""

    dataset_digest: str
    hyper_digest: str
    arch_digest: str
    seed: int

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(bytes.fromhex(self.dataset_digest))
        h.update(bytes.fromhex(self.hyper_digest))
        h.update(bytes.fromhex(self.arch_digest))
        h.update(struct.pack("<q", self.seed))
        return h.hexdigest()


class Store:
    def __init__(self, root):
        self.root = Path(root)
        for kind in _KINDS:
            (self.root / kind).mkdir(parents=True, exist_ok=True)

    def _path(self, kind: str, digest: str) -> Path:
        return self.root / kind / digest

    def _write(self, kind: str, digest: str, payload: bytes):
        path = self._path(kind, digest)
        if path.exists():
            existing = self._read(kind, digest)
            if existing != payload:
                raise IntegrityError(f"conflicting content for {kind}/{digest}")
            return
        record = hashlib.sha256(payload).digest() + payload
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(record)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    def _read(self, kind: str, digest: str) -> bytes | None:
        path = self._path(kind, digest)
        if not path.exists():
            return None
        record = path.read_bytes()
        payload = record[32:]
        if hashlib.sha256(payload).digest() != record[:32]:
            raise IntegrityError(f"digest mismatch reading {kind}/{digest}")
        return payload

    # -- models ------------------------------------------------------------

    def put_model(self, key: CellKey, model: Model):
        self._write("models", key.digest(), _models.model_to_bytes(model))

    def get_model(self, key: CellKey) -> Model | None:
        payload = self._read("models", key.digest())
        return None if payload is None else _models.model_from_bytes(payload)

    # -- score vectors -----------------------------------------------------

    def put_scores(self, key: CellKey, vector: np.ndarray):
        payload = np.ascontiguousarray(vector, dtype="<f8").tobytes()
        self._write("scores", key.digest(), payload)

    def get_scores(self, key: CellKey) -> np.ndarray | None:
        payload = self._read("scores", key.digest())
        return None if payload is None else np.frombuffer(payload, dtype="<f8").copy()

    # -- JSON records (HPO results, manifests) ------------------------------

    def put_record(self, kind: str, name: str, record: dict):
        payload = json.dumps(record, indent=2, sort_keys=True).encode()
        self._write(kind, name, payload)

    def get_record(self, kind: str, name: str) -> dict | None:
        payload = self._read(kind, name)
        return None if payload is None else json.loads(payload.decode())

    # -- garbage collection ------------------------------------------------

    def list_objects(self, kind: str) -> list[str]:
        return sorted(
            p.name for p in (self.root / kind).iterdir() if not p.name.startswith(".")
        )

    def unreferenced(self) -> list[str]:
        """Objects not referenced by any manifest or HPO record. Never deletes."""
        referenced: set[str] = set()

        def walk(value):
            if isinstance(value, dict):
                for v in value.values():
                    walk(v)
            elif isinstance(value, list):
                for v in value:
                    walk(v)
            elif isinstance(value, str) and len(value) == 64:
                referenced.add(value)

        for kind in ("manifests", "hpo"):
            for name in self.list_objects(kind):
                record = self.get_record(kind, name)
                referenced.add(name)
                walk(record)
        orphans = []
        for kind in ("models", "scores"):
            for name in self.list_objects(kind):
                if name not in referenced:
                    orphans.append(f"{kind}/{name}")
        return orphans
