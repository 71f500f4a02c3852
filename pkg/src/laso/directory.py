"""Backend directory: user records, beacon records, and the location
log, with a canonical human-readable store format.

The store is JSON with a versioned header naming the group suite and
every symmetric primitive in use; a load refuses identifiers it does
not recognize rather than guessing. Serialization is canonical (sorted
records, sorted keys, fixed indentation), so save/load/save is
byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .crypto import AEAD_ID, DIGEST_SIZE, HASH_ID, KDF_ID, PRF_ID, TokenSeed
from .group import UnsupportedSuiteError, suite_from_id
from .policy import PolicySyntaxError, parse_policy, valid_attribute

STORE_FORMAT = "laso-directory"
STORE_VERSION = 1
BEACON_ID_SIZE = 16
USERNAME_MAX_BYTES = 64

_PRIMITIVES = {"hash": HASH_ID, "kdf": KDF_ID, "aead": AEAD_ID, "prf": PRF_ID}


class DirectoryError(ValueError):
    """Store violates the format: bad header, duplicate records,
    unknown primitive identifiers, or malformed fields."""


def valid_username(name: object) -> bool:
    """1 to 64 bytes of UTF-8, no NUL. Usernames are case-sensitive."""
    if not isinstance(name, str) or "\x00" in name:
        return False
    return 1 <= len(name.encode("utf-8")) <= USERNAME_MAX_BYTES


@dataclass
class UserRecord:
    username: str
    password_digest: bytes
    cnonce_seed: TokenSeed
    attrs: frozenset[str]

    def __post_init__(self):
        if not valid_username(self.username):
            raise ValueError(f"invalid username {self.username!r}")
        if len(self.password_digest) != DIGEST_SIZE:
            raise ValueError("password_digest must be a 32-byte digest")
        if self.cnonce_seed.owner != "user":
            raise ValueError("user record needs a user-owned seed")
        self.attrs = frozenset(self.attrs)
        for attr in self.attrs:
            if not valid_attribute(attr):
                raise ValueError(f"invalid attribute name {attr!r}")


@dataclass
class BeaconRecord:
    beacon_id: bytes
    seed: TokenSeed
    policy_text: str
    position: tuple[float, float]
    range_m: float

    def __post_init__(self):
        if len(self.beacon_id) != BEACON_ID_SIZE:
            raise ValueError(f"beacon_id must be {BEACON_ID_SIZE} bytes")
        if self.seed.owner != "beacon":
            raise ValueError("beacon record needs a beacon-owned seed")
        parse_policy(self.policy_text)  # reject unparseable policies at the door
        self.position = (float(self.position[0]), float(self.position[1]))
        if not self.range_m > 0:
            raise ValueError("range_m must be positive")
        self.range_m = float(self.range_m)

    def policy(self):
        return parse_policy(self.policy_text)


@dataclass(frozen=True)
class LocationEntry:
    time: float
    username: str
    beacon_id: bytes
    epoch: int


class Directory:
    """Mutable backend state. Lookups return None for unknown names;
    the caller decides what that means."""

    def __init__(self, suite_id: str):
        suite_from_id(suite_id)  # unknown suites are refused here too
        self.suite_id = suite_id
        self._users: dict[str, UserRecord] = {}
        self._beacons: dict[bytes, BeaconRecord] = {}
        self.location_log: list[LocationEntry] = []

    def add_user(self, record: UserRecord):
        if record.username in self._users:
            raise DirectoryError(f"duplicate username {record.username!r}")
        self._users[record.username] = record

    def add_beacon(self, record: BeaconRecord):
        if record.beacon_id in self._beacons:
            raise DirectoryError(f"duplicate beacon id {record.beacon_id.hex()}")
        self._beacons[record.beacon_id] = record

    def lookup_user(self, username: str) -> UserRecord | None:
        return self._users.get(username)

    def set_beacon_policy(self, beacon_id: bytes, policy_text: str):
        """Swap a beacon's policy in place. No key changes anywhere;
        the next broadcast simply gates on the new policy."""
        record = self._beacons.get(beacon_id)
        if record is None:
            raise DirectoryError(f"no beacon {beacon_id.hex()}")
        self._beacons[beacon_id] = replace(record, policy_text=policy_text)

    def lookup_beacon(self, beacon_id: bytes) -> BeaconRecord | None:
        return self._beacons.get(beacon_id)

    def record_location(self, time: float, username: str, beacon_id: bytes, epoch: int):
        # append-only; there is deliberately no removal API
        self.location_log.append(LocationEntry(time, username, beacon_id, epoch))

    def users(self) -> list[UserRecord]:
        return [self._users[name] for name in sorted(self._users)]

    def beacons(self) -> list[BeaconRecord]:
        return [self._beacons[bid] for bid in sorted(self._beacons)]


def dumps_directory(directory: Directory) -> str:
    doc = {
        "header": {
            "format": STORE_FORMAT,
            "version": STORE_VERSION,
            "suite": directory.suite_id,
            **_PRIMITIVES,
        },
        "users": [
            {
                "username": u.username,
                "password_digest": u.password_digest.hex(),
                "cnonce_seed": u.cnonce_seed.secret.hex(),
                "attrs": sorted(u.attrs),
            }
            for u in directory.users()
        ],
        "beacons": [
            {
                "beacon_id": b.beacon_id.hex(),
                "seed": b.seed.secret.hex(),
                "policy": b.policy_text,
                "position": [b.position[0], b.position[1]],
                "range_m": b.range_m,
            }
            for b in directory.beacons()
        ],
        "location_log": [
            {
                "time": e.time,
                "username": e.username,
                "beacon_id": e.beacon_id.hex(),
                "epoch": e.epoch,
            }
            for e in directory.location_log
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def loads_directory(text: str) -> Directory:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DirectoryError(f"store is not valid JSON: line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise DirectoryError("store root must be an object")
    header = _field(doc, "header", dict, "store")
    if header.get("format") != STORE_FORMAT:
        raise DirectoryError(f"unknown store format {header.get('format')!r}")
    if header.get("version") != STORE_VERSION:
        raise DirectoryError(f"unsupported store version {header.get('version')!r}")
    for name, expected in _PRIMITIVES.items():
        if header.get(name) != expected:
            raise DirectoryError(f"unknown {name} identifier {header.get(name)!r}")
    suite_id = header.get("suite")
    try:
        suite_from_id(suite_id)
    except (UnsupportedSuiteError, ValueError, TypeError) as e:
        raise DirectoryError(f"unknown suite identifier {suite_id!r}: {e}") from None
    directory = Directory(suite_id)
    for entry in _field(doc, "users", list, "store"):
        username = _field(entry, "username", str, "user record")
        try:
            record = UserRecord(
                username=username,
                password_digest=_hex_field(entry, "password_digest", "user record"),
                cnonce_seed=TokenSeed(_hex_field(entry, "cnonce_seed", "user record"), "user"),
                attrs=frozenset(_field(entry, "attrs", list, "user record")),
            )
        except ValueError as e:
            raise DirectoryError(f"user {username!r}: {e}") from None
        directory.add_user(record)
    for entry in _field(doc, "beacons", list, "store"):
        beacon_hex = _field(entry, "beacon_id", str, "beacon record")
        try:
            position = _field(entry, "position", list, "beacon record")
            record = BeaconRecord(
                beacon_id=_hex_field(entry, "beacon_id", "beacon record"),
                seed=TokenSeed(_hex_field(entry, "seed", "beacon record"), "beacon"),
                policy_text=_field(entry, "policy", str, "beacon record"),
                position=(position[0], position[1]),
                range_m=_field(entry, "range_m", (int, float), "beacon record"),
            )
        except PolicySyntaxError as e:
            raise DirectoryError(f"beacon {beacon_hex}: bad policy: {e}") from None
        except (ValueError, IndexError, TypeError) as e:
            raise DirectoryError(f"beacon {beacon_hex}: {e}") from None
        directory.add_beacon(record)
    for entry in _field(doc, "location_log", list, "store"):
        try:
            directory.record_location(
                time=float(_field(entry, "time", (int, float), "location entry")),
                username=_field(entry, "username", str, "location entry"),
                beacon_id=_hex_field(entry, "beacon_id", "location entry"),
                epoch=_field(entry, "epoch", int, "location entry"),
            )
        except ValueError as e:
            raise DirectoryError(f"location entry: {e}") from None
    return directory


def save_directory(directory: Directory, path: str | Path):
    Path(path).write_text(dumps_directory(directory), encoding="utf-8")


def load_directory(path: str | Path) -> Directory:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DirectoryError(f"cannot read store {path}: {e}") from None
    return loads_directory(text)


def _field(obj, name, types, where):
    if not isinstance(obj, dict) or name not in obj:
        raise DirectoryError(f"{where}: missing field {name!r}")
    value = obj[name]
    if not isinstance(value, types):
        raise DirectoryError(f"{where}: field {name!r} has wrong type")
    return value


def _hex_field(obj, name, where) -> bytes:
    value = _field(obj, name, str, where)
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise DirectoryError(f"{where}: field {name!r} is not hex") from None
