"""Persistence of normalized matrix powers for pseudo-period detection"""
import fcntl
import json
import logging
import os
import shutil
from abc import ABC, abstractmethod
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional

import numpy as np

from core.errors import PowerStoreError, ResourceLimitError
from core.minplus import NormalizedPower, StabilityCert

logger = logging.getLogger(__name__)


class PowerStore(ABC):
    """Interface shared by the disk and memory stores"""

    @abstractmethod
    def bind(self, matrix_digest: str, dimension: int) -> bool:
        """Attach the store to a length matrix; True when stored content belongs to it"""

    @abstractmethod
    def save(self, power: NormalizedPower) -> None:
        pass

    @abstractmethod
    def load(self, k: int) -> NormalizedPower:
        pass

    @abstractmethod
    def exponents_for(self, digest: str) -> List[int]:
        pass

    @abstractmethod
    def max_exponent(self) -> int:
        pass

    @abstractmethod
    def save_certificate(self, cert: StabilityCert) -> None:
        pass

    @abstractmethod
    def load_certificate(self) -> Optional[StabilityCert]:
        pass

    @abstractmethod
    def clear(self) -> None:
        pass

    @contextmanager
    def exclusive(self) -> Iterator["PowerStore"]:
        """Hold the store for one detection run"""
        yield self


class MemoryPowerStore(PowerStore):
    """Dictionary-backed store for tests and small graphs.

    With `memory_cap_bytes` set, a save that would make the held powers
    exceed the cap raises ResourceLimitError and stores nothing.
    """

    def __init__(self, memory_cap_bytes: Optional[int] = None):
        self.memory_cap_bytes = memory_cap_bytes
        self._powers: Dict[int, NormalizedPower] = {}
        self._index: Dict[str, List[int]] = {}
        self._certificate: Optional[StabilityCert] = None
        self._binding = None
        self._nbytes = 0

    @property
    def nbytes(self) -> int:
        return self._nbytes

    def bind(self, matrix_digest: str, dimension: int) -> bool:
        binding = (matrix_digest, dimension)
        if self._binding == binding:
            return True
        self.clear()
        self._binding = binding
        return False

    def save(self, power: NormalizedPower) -> None:
        previous = self._powers.get(power.k)
        total = self._nbytes + power.normalized.nbytes
        if previous is not None:
            total -= previous.normalized.nbytes
        if self.memory_cap_bytes is not None and total > self.memory_cap_bytes:
            raise ResourceLimitError(f"in-memory power store would hold {total} bytes at exponent {power.k}",
                                     self.memory_cap_bytes)
        if previous is None:
            self._index.setdefault(power.digest, []).append(power.k)
        self._powers[power.k] = power
        self._nbytes = total

    def load(self, k: int) -> NormalizedPower:
        try:
            return self._powers[k]
        except KeyError:
            raise PowerStoreError(f"power {k} is not stored")

    def exponents_for(self, digest: str) -> List[int]:
        return list(self._index.get(digest, []))

    def max_exponent(self) -> int:
        k = 0
        while k + 1 in self._powers:
            k += 1
        return k

    def save_certificate(self, cert: StabilityCert) -> None:
        self._certificate = cert

    def load_certificate(self) -> Optional[StabilityCert]:
        return self._certificate

    def clear(self) -> None:
        self._powers.clear()
        self._index.clear()
        self._certificate = None
        self._binding = None
        self._nbytes = 0


class DiskPowerStore(PowerStore):
    """One .npz file per exponent plus a digest index.

    Each power file holds the dimension, the exponent, the offset (-1 for ∞),
    the normalized entries as little-endian int64 and the digest.

    A detection run holds an exclusive flock on the sibling file
    `<directory>.lock`; a second holder gets PowerStoreError. The lock file
    sits outside the directory so clear() never unlinks it. flock is POSIX only.
    """

    INDEX_FILE = "index.json"
    META_FILE = "meta.json"
    CERT_FILE = "certificate.json"

    def __init__(self, directory: str, compress: bool = True):
        self.directory = directory
        self.compress = compress
        self._index: Dict[str, List[int]] = {}
        try:
            os.makedirs(directory, exist_ok=True)
        except OSError as e:
            raise PowerStoreError(f"cannot create power store {directory}: {e}") from e
        self._index = self._read_json(self.INDEX_FILE) or {}

    @property
    def lock_path(self) -> str:
        return os.path.normpath(self.directory) + ".lock"

    @contextmanager
    def exclusive(self) -> Iterator["DiskPowerStore"]:
        try:
            handle = open(self.lock_path, "a")
        except OSError as e:
            raise PowerStoreError(f"cannot open lock file {self.lock_path}: {e}") from e
        with handle:
            try:
                fcntl.flock(handle.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
            except OSError as e:
                raise PowerStoreError(f"power store {self.directory} is in use by another run") from e
            logger.debug("Locked power store %s", self.directory)
            try:
                self._index = self._read_json(self.INDEX_FILE) or {}
                yield self
            finally:
                fcntl.flock(handle.fileno(), fcntl.LOCK_UN)

    def _path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def _power_path(self, k: int) -> str:
        return self._path(f"power_{k:06d}.npz")

    def _read_json(self, name: str) -> Optional[dict]:
        path = self._path(name)
        if not os.path.exists(path):
            return None
        try:
            with open(path, "r") as f:
                return json.load(f)
        except (json.JSONDecodeError, OSError) as e:
            logger.warning("Ignoring unreadable %s: %s", path, e)
            return None

    def _write_json(self, name: str, payload: dict) -> None:
        path = self._path(name)
        tmp = path + ".tmp"
        try:
            with open(tmp, "w") as f:
                json.dump(payload, f, indent=2, sort_keys=True)
            os.replace(tmp, path)
        except OSError as e:
            raise PowerStoreError(f"cannot write {path}: {e}") from e

    def bind(self, matrix_digest: str, dimension: int) -> bool:
        meta = self._read_json(self.META_FILE)
        if meta == {"matrix_digest": matrix_digest, "dimension": dimension}:
            return True
        if meta is not None:
            logger.info("Power store %s belongs to another matrix; clearing it", self.directory)
        self.clear()
        self._write_json(self.META_FILE, {"matrix_digest": matrix_digest, "dimension": dimension})
        return False

    def save(self, power: NormalizedPower) -> None:
        arrays = {
            "dimension": np.asarray(power.normalized.shape[0], dtype="<i8"),
            "k": np.asarray(power.k, dtype="<i8"),
            "offset": np.asarray(-1 if power.offset is None else power.offset, dtype="<i8"),
            "entries": np.ascontiguousarray(power.normalized, dtype="<i8"),
            "digest": np.asarray(power.digest),
        }
        writer = np.savez_compressed if self.compress else np.savez
        try:
            with open(self._power_path(power.k), "wb") as f:
                writer(f, **arrays)
        except OSError as e:
            raise PowerStoreError(f"cannot write power {power.k}: {e}") from e

        exponents = self._index.setdefault(power.digest, [])
        if power.k not in exponents:
            exponents.append(power.k)
            self._write_json(self.INDEX_FILE, self._index)

    def load(self, k: int) -> NormalizedPower:
        path = self._power_path(k)
        if not os.path.exists(path):
            raise PowerStoreError(f"power {k} is not stored in {self.directory}")
        try:
            with np.load(path) as data:
                offset = int(data["offset"])
                return NormalizedPower(
                    k=int(data["k"]),
                    offset=None if offset < 0 else offset,
                    normalized=data["entries"].astype(np.int64),
                    digest=str(data["digest"]),
                )
        except (OSError, KeyError, ValueError) as e:
            raise PowerStoreError(f"cannot read power {k}: {e}") from e

    def exponents_for(self, digest: str) -> List[int]:
        return list(self._index.get(digest, []))

    def max_exponent(self) -> int:
        """Largest k such that every exponent 1..k is stored"""
        stored = {k for ks in self._index.values() for k in ks}
        k = 0
        while k + 1 in stored:
            k += 1
        return k

    def save_certificate(self, cert: StabilityCert) -> None:
        self._write_json(self.CERT_FILE, {"c": cert.c, "p": cert.p, "u": cert.u})

    def load_certificate(self) -> Optional[StabilityCert]:
        payload = self._read_json(self.CERT_FILE)
        if not payload:
            return None
        return StabilityCert(c=int(payload["c"]), p=int(payload["p"]), u=int(payload["u"]))

    def clear(self) -> None:
        self._index = {}
        try:
            for name in os.listdir(self.directory):
                path = self._path(name)
                if os.path.isdir(path):
                    shutil.rmtree(path)
                else:
                    os.remove(path)
        except OSError as e:
            raise PowerStoreError(f"cannot clear power store {self.directory}: {e}") from e
