"""Deterministic fixed-step mobility simulation.

Actors move along waypoint paths over a bounded plane; beacons
advertise on a fixed cadence; honest clients extract nonces and sign on
when the nonce rolls; attackers replay captured frames or forge without
keys. Same config and seed means bit-identical event logs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

from .abe import AttributeKey, keygen, setup
from .crypto import SEED_SIZE, EpochClock, TokenSeed, password_digest, token_nonce
from .directory import BEACON_ID_SIZE, BeaconRecord, Directory, UserRecord, valid_username
from .group import DEFAULT_MODULUS, GroupSuite
from .policy import PolicySyntaxError, eval_boolean, parse_policy
from .protocol import (
    ReplayCache,
    backend_verify,
    broadcast_from_bytes,
    broadcast_to_bytes,
    build_broadcast,
    build_sign_on,
    extract_nonce,
    signon_from_bytes,
    signon_to_bytes,
)

SCENARIO_FORMAT = "laso-scenario"
SCENARIO_VERSION = 1

REPLAY_MODE = "replay"
NO_KEY_MODE = "no_key"
# steps after capture at which a replay attacker re-submits a frame
DEFAULT_REPLAY_OFFSETS = (1, 65, 130)


class ScenarioError(ValueError):
    """Scenario config that cannot be run as given."""


Point = tuple[float, float]


@dataclass(frozen=True)
class BeaconSpec:
    beacon_id: bytes
    position: Point
    range_m: float
    policy_text: str


@dataclass(frozen=True)
class UserSpec:
    username: str
    password: str
    attrs: frozenset[str]
    waypoints: tuple[Point, ...]
    speed: float


@dataclass(frozen=True)
class AttackerSpec:
    name: str
    mode: str  # REPLAY_MODE or NO_KEY_MODE
    waypoints: tuple[Point, ...]
    speed: float
    target: str | None = None  # no_key: username to forge as
    offsets: tuple[int, ...] = DEFAULT_REPLAY_OFFSETS


@dataclass(frozen=True)
class PolicyChange:
    step: int
    beacon_id: bytes
    policy_text: str


@dataclass
class SimConfig:
    world: Point
    time_step: float
    duration_steps: int
    seed: int
    beacons: tuple[BeaconSpec, ...]
    users: tuple[UserSpec, ...]
    attackers: tuple[AttackerSpec, ...] = ()
    policy_changes: tuple[PolicyChange, ...] = ()
    suite_modulus: int = DEFAULT_MODULUS
    nonce_period: int = 60
    cnonce_period: int = 30
    advert_interval: float = 5.0

    def validate(self):
        if not (self.world[0] > 0 and self.world[1] > 0):
            raise ScenarioError("world bounds must be positive")
        if self.time_step <= 0:
            raise ScenarioError("time_step must be positive")
        if self.duration_steps < 1:
            raise ScenarioError("duration_steps must be at least 1")
        if self.nonce_period <= 0 or self.cnonce_period <= 0:
            raise ScenarioError("epoch periods must be positive")
        ratio = self.advert_interval / self.time_step
        if self.advert_interval <= 0 or abs(ratio - round(ratio)) > 1e-9:
            raise ScenarioError("advert_interval must be a positive multiple of time_step")
        seen_beacons: set[bytes] = set()
        for b in self.beacons:
            if b.beacon_id in seen_beacons:
                raise ScenarioError(f"duplicate beacon id {b.beacon_id.hex()}")
            seen_beacons.add(b.beacon_id)
            try:
                parse_policy(b.policy_text)
            except PolicySyntaxError as e:
                raise ScenarioError(f"beacon {b.beacon_id.hex()}: bad policy: {e}") from None
            self._check_point(b.position, f"beacon {b.beacon_id.hex()}")
        names: set[str] = set()
        for spec in (*self.users, *self.attackers):
            name = spec.username if isinstance(spec, UserSpec) else spec.name
            if name in names:
                raise ScenarioError(f"duplicate actor name {name!r}")
            names.add(name)
            if not spec.waypoints:
                raise ScenarioError(f"actor {name!r} has no waypoints")
            for point in spec.waypoints:
                self._check_point(point, f"actor {name!r}")
            if spec.speed < 0:
                raise ScenarioError(f"actor {name!r} has negative speed")
        for a in self.attackers:
            if a.mode not in (REPLAY_MODE, NO_KEY_MODE):
                raise ScenarioError(f"unknown attacker mode {a.mode!r}")
            if a.mode == REPLAY_MODE and any(off < 1 for off in a.offsets):
                raise ScenarioError("replay offsets must be at least one step")
        for change in self.policy_changes:
            if not 0 <= change.step < self.duration_steps:
                raise ScenarioError(f"policy change step {change.step} outside the run")
            if change.beacon_id not in seen_beacons:
                raise ScenarioError(f"policy change names unknown beacon {change.beacon_id.hex()}")
            try:
                parse_policy(change.policy_text)
            except PolicySyntaxError as e:
                raise ScenarioError(f"policy change at step {change.step}: bad policy: {e}") from None

    def _check_point(self, point: Point, who: str):
        if not (0 <= point[0] <= self.world[0] and 0 <= point[1] <= self.world[1]):
            raise ScenarioError(f"{who}: point {point} outside world bounds")


@dataclass(frozen=True)
class SimEvent:
    step: int
    time: float
    kind: str  # broadcast | extract | signon | replay | forge | policy_change
    actor: str
    beacon: str | None
    epoch: int | None
    outcome: str

    def to_line(self) -> str:
        return json.dumps(
            {
                "step": self.step,
                "time": self.time,
                "kind": self.kind,
                "actor": self.actor,
                "beacon": self.beacon,
                "epoch": self.epoch,
                "outcome": self.outcome,
            },
            sort_keys=True,
        )


def events_to_jsonl(events: list[SimEvent]) -> str:
    return "".join(event.to_line() + "\n" for event in events)


@dataclass
class SimMetrics:
    broadcasts: int = 0
    extractions_ok: int = 0
    extractions_denied: int = 0
    accepted: int = 0
    rejected: dict[str, int] = field(default_factory=dict)
    replay_attempts: int = 0
    forge_attempts: int = 0
    adversary_accepted: int = 0
    accepted_by_actor: dict[str, int] = field(default_factory=dict)
    trace: dict[str, list[tuple[float, str, int]]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "broadcasts": self.broadcasts,
            "extractions_ok": self.extractions_ok,
            "extractions_denied": self.extractions_denied,
            "accepted": self.accepted,
            "rejected": dict(sorted(self.rejected.items())),
            "replay_attempts": self.replay_attempts,
            "forge_attempts": self.forge_attempts,
            "adversary_accepted": self.adversary_accepted,
            "accepted_by_actor": dict(sorted(self.accepted_by_actor.items())),
            "trace": {k: [list(item) for item in v] for k, v in sorted(self.trace.items())},
        }


def summarize(events: list[SimEvent]) -> SimMetrics:
    """Pure aggregation of an event log; recomputable at any time."""
    m = SimMetrics()
    for e in events:
        if e.kind == "broadcast":
            m.broadcasts += 1
        elif e.kind == "extract":
            if e.outcome == "ok":
                m.extractions_ok += 1
            else:
                m.extractions_denied += 1
        elif e.kind in ("signon", "replay", "forge"):
            if e.kind == "replay":
                m.replay_attempts += 1
            elif e.kind == "forge":
                m.forge_attempts += 1
            if e.outcome == "accepted":
                m.accepted += 1
                m.accepted_by_actor[e.actor] = m.accepted_by_actor.get(e.actor, 0) + 1
                if e.kind != "signon":
                    m.adversary_accepted += 1
                assert e.beacon is not None and e.epoch is not None
                m.trace.setdefault(e.actor, []).append((e.time, e.beacon, e.epoch))
            else:
                reason = e.outcome.removeprefix("rejected:")
                m.rejected[reason] = m.rejected.get(reason, 0) + 1
    return m


def position_at(waypoints: tuple[Point, ...], speed: float, t: float) -> Point:
    """Linear interpolation along the waypoint chain at constant speed,
    holding the final waypoint once the path is exhausted."""
    if len(waypoints) == 1 or speed <= 0:
        return waypoints[0]
    remaining = speed * t
    for (x0, y0), (x1, y1) in zip(waypoints, waypoints[1:]):
        leg = math.dist((x0, y0), (x1, y1))
        if leg == 0:
            continue
        if remaining <= leg:
            f = remaining / leg
            return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))
        remaining -= leg
    return waypoints[-1]


def reception_check(position: Point, beacon: BeaconRecord) -> bool:
    """Closed-disk radio model: on the boundary is in range."""
    return math.dist(position, beacon.position) <= beacon.range_m


@dataclass
class SimResult:
    config: SimConfig
    events: list[SimEvent]
    metrics: SimMetrics
    directory: Directory
    transcript: list[bytes]  # every frame that went over the air, in order
    secret_samples: set[bytes]  # nonces, c-nonces, seeds, password digests used


@dataclass
class _Actor:
    name: str
    kind: str  # "user" | REPLAY_MODE | NO_KEY_MODE
    waypoints: tuple[Point, ...]
    speed: float
    spec: UserSpec | AttackerSpec
    key: AttributeKey | None = None
    record: UserRecord | None = None
    last_nonce: dict[bytes, bytes] = field(default_factory=dict)
    pending: list[tuple[int, bytes, bytes]] = field(default_factory=list)  # (due step, beacon_id, frame)


def run_sim(config: SimConfig) -> SimResult:
    config.validate()
    rng = Random(config.seed)
    suite = GroupSuite(config.suite_modulus)
    params, master = setup(suite, rng)
    directory = Directory(suite.suite_id)
    secret_samples: set[bytes] = set()
    actors: list[_Actor] = []

    for spec in config.users:
        seed = TokenSeed(rng.randbytes(SEED_SIZE), "user")
        pw = password_digest(spec.password)
        record = UserRecord(spec.username, pw, seed, spec.attrs)
        directory.add_user(record)
        key = keygen(params, master, spec.attrs, rng)
        actors.append(_Actor(spec.username, "user", spec.waypoints, spec.speed, spec, key=key, record=record))
        secret_samples.add(pw)
        secret_samples.add(seed.secret)
    for spec in config.beacons:
        seed = TokenSeed(rng.randbytes(SEED_SIZE), "beacon")
        directory.add_beacon(BeaconRecord(spec.beacon_id, seed, spec.policy_text, spec.position, spec.range_m))
        secret_samples.add(seed.secret)
    for spec in config.attackers:
        actors.append(_Actor(spec.name, spec.mode, spec.waypoints, spec.speed, spec))

    cursor = [0.0]
    beacon_clock = EpochClock(config.nonce_period, lambda: cursor[0])
    cnonce_clock = EpochClock(config.cnonce_period, lambda: cursor[0])
    cache = ReplayCache()
    events: list[SimEvent] = []
    transcript: list[bytes] = []

    changes: dict[int, list[PolicyChange]] = {}
    for change in config.policy_changes:
        changes.setdefault(change.step, []).append(change)
    advert_steps = round(config.advert_interval / config.time_step)

    def emit(step: int, kind: str, actor: str, beacon: bytes | None, epoch: int | None, outcome: str):
        events.append(SimEvent(step, cursor[0], kind, actor, beacon.hex() if beacon else None, epoch, outcome))

    def submit(step: int, kind: str, actor: _Actor, beacon_id: bytes, epoch_seen: int, frame: bytes):
        transcript.append(frame)
        result = backend_verify(signon_from_bytes(frame), directory, beacon_clock, cnonce_clock, cache)
        if result.accepted:
            emit(step, kind, actor.name, result.beacon_id, result.epoch, "accepted")
        else:
            emit(step, kind, actor.name, beacon_id, epoch_seen, f"rejected:{result.reason.value}")
        return result

    for step in range(config.duration_steps):
        cursor[0] = step * config.time_step
        for change in changes.get(step, ()):
            directory.set_beacon_policy(change.beacon_id, change.policy_text)
            emit(step, "policy_change", change.beacon_id.hex(), change.beacon_id, None, "applied")
        positions = {a.name: position_at(a.waypoints, a.speed, cursor[0]) for a in actors}

        if step % advert_steps == 0:
            for bspec in config.beacons:
                beacon = directory.lookup_beacon(bspec.beacon_id)
                assert beacon is not None
                epoch = beacon_clock.epoch()
                frame = broadcast_to_bytes(build_broadcast(beacon, params, epoch, rng), params)
                transcript.append(frame)
                secret_samples.add(token_nonce(beacon.seed, epoch))
                emit(step, "broadcast", beacon.beacon_id.hex(), beacon.beacon_id, epoch, "sent")
                for actor in actors:
                    if not reception_check(positions[actor.name], beacon):
                        continue
                    received = broadcast_from_bytes(frame, params)
                    if actor.kind == "user":
                        _user_receive(step, actor, received, beacon, positions, actors, params,
                                      cnonce_clock, rng, emit, submit, secret_samples)
                    elif actor.kind == NO_KEY_MODE:
                        _forge(step, actor, received, config, cnonce_clock, rng, submit)

        for actor in actors:
            if actor.kind != REPLAY_MODE or not actor.pending:
                continue
            due = [entry for entry in actor.pending if entry[0] == step]
            if not due:
                continue
            actor.pending = [entry for entry in actor.pending if entry[0] != step]
            for _, beacon_id, frame in due:
                beacon = directory.lookup_beacon(beacon_id)
                if beacon is None or not reception_check(positions[actor.name], beacon):
                    continue
                hint = signon_from_bytes(frame).epoch_hint
                submit(step, "replay", actor, beacon_id, hint, frame)

    return SimResult(config, events, summarize(events), directory, transcript, secret_samples)


def _user_receive(step, actor, broadcast, beacon, positions, actors, params,
                  cnonce_clock, rng, emit, submit, secret_samples):
    assert actor.key is not None and actor.record is not None
    nonce = extract_nonce(broadcast, params, actor.key)
    if nonce is None:
        emit(step, "extract", actor.name, beacon.beacon_id, broadcast.epoch, "not_authorized")
        return
    emit(step, "extract", actor.name, beacon.beacon_id, broadcast.epoch, "ok")
    if actor.last_nonce.get(beacon.beacon_id) == nonce:
        return
    message = build_sign_on(
        actor.record.username,
        actor.record.password_digest,
        actor.record.cnonce_seed,
        nonce,
        beacon.beacon_id,
        broadcast.epoch,
        cnonce_clock,
        rng,
    )
    secret_samples.add(token_nonce(actor.record.cnonce_seed, cnonce_clock.epoch()))
    frame = signon_to_bytes(message)
    result = submit(step, "signon", actor, beacon.beacon_id, broadcast.epoch, frame)
    if result.accepted:
        actor.last_nonce[beacon.beacon_id] = nonce
        for eavesdropper in actors:
            if eavesdropper.kind != REPLAY_MODE:
                continue
            if not reception_check(positions[eavesdropper.name], beacon):
                continue
            spec = eavesdropper.spec
            assert isinstance(spec, AttackerSpec)
            for offset in spec.offsets:
                eavesdropper.pending.append((step + offset, beacon.beacon_id, frame))


def _forge(step, actor, broadcast, config, cnonce_clock, rng, submit):
    spec = actor.spec
    assert isinstance(spec, AttackerSpec)
    target = spec.target or (config.users[0].username if config.users else "nobody")
    guessed_nonce = rng.randbytes(32)
    fake_digest = rng.randbytes(32)
    fake_seed = TokenSeed(rng.randbytes(SEED_SIZE), "user")
    message = build_sign_on(
        target, fake_digest, fake_seed, guessed_nonce,
        broadcast.beacon_id, broadcast.epoch, cnonce_clock, rng,
    )
    submit(step, "forge", actor, broadcast.beacon_id, broadcast.epoch, signon_to_bytes(message))


def audit_soundness(result: SimResult) -> list[str]:
    """Post-hoc check of every accepted sign-on against geometry and
    the policy in effect at that moment. Empty list means sound."""
    config = result.config
    users = {u.username: u for u in config.users}
    beacons = {b.beacon_id.hex(): b for b in config.beacons}
    violations: list[str] = []
    for e in result.events:
        if e.kind not in ("signon", "replay", "forge") or e.outcome != "accepted":
            continue
        where = f"step {e.step} actor {e.actor} beacon {e.beacon}"
        if e.kind != "signon":
            violations.append(f"{where}: adversarial {e.kind} accepted")
            continue
        spec = users.get(e.actor)
        if spec is None:
            violations.append(f"{where}: accepted actor is not a configured user")
            continue
        bspec = beacons.get(e.beacon or "")
        if bspec is None:
            violations.append(f"{where}: accepted at unknown beacon")
            continue
        policy_text = bspec.policy_text
        for change in config.policy_changes:
            if change.beacon_id.hex() == e.beacon and change.step <= e.step:
                policy_text = change.policy_text
        if not eval_boolean(parse_policy(policy_text), spec.attrs):
            violations.append(f"{where}: attributes do not satisfy the active policy")
        position = position_at(spec.waypoints, spec.speed, e.time)
        if math.dist(position, bspec.position) > bspec.range_m:
            violations.append(f"{where}: user was out of radio range")
    return violations


# scenario files share the store family: versioned header, canonical JSON

def scenario_from_dict(doc: dict) -> SimConfig:
    try:
        header = doc["header"]
        if header.get("format") != SCENARIO_FORMAT:
            raise ScenarioError(f"unknown scenario format {header.get('format')!r}")
        if header.get("version") != SCENARIO_VERSION:
            raise ScenarioError(f"unsupported scenario version {header.get('version')!r}")
        beacons = tuple(
            BeaconSpec(
                beacon_id=bytes.fromhex(b["beacon_id"]),
                position=(float(b["position"][0]), float(b["position"][1])),
                range_m=float(b["range_m"]),
                policy_text=b["policy"],
            )
            for b in doc["beacons"]
        )
        users = tuple(
            UserSpec(
                username=u["username"],
                password=u["password"],
                attrs=frozenset(u["attrs"]),
                waypoints=_waypoints(u["waypoints"]),
                speed=float(u.get("speed", 0.0)),
            )
            for u in doc["users"]
        )
        attackers = tuple(
            AttackerSpec(
                name=a["name"],
                mode=a["mode"],
                waypoints=_waypoints(a["waypoints"]),
                speed=float(a.get("speed", 0.0)),
                target=a.get("target"),
                offsets=tuple(int(x) for x in a.get("offsets", DEFAULT_REPLAY_OFFSETS)),
            )
            for a in doc.get("attackers", [])
        )
        config = SimConfig(
            world=(float(doc["world"][0]), float(doc["world"][1])),
            time_step=float(doc["time_step"]),
            duration_steps=int(doc["duration_steps"]),
            seed=int(doc["seed"]),
            beacons=beacons,
            users=users,
            attackers=attackers,
            policy_changes=tuple(
                PolicyChange(int(c["step"]), bytes.fromhex(c["beacon_id"]), c["policy"])
                for c in doc.get("policy_changes", [])
            ),
            suite_modulus=int(doc.get("suite_modulus", DEFAULT_MODULUS)),
            nonce_period=int(doc.get("nonce_period", 60)),
            cnonce_period=int(doc.get("cnonce_period", 30)),
            advert_interval=float(doc.get("advert_interval", 5.0)),
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise ScenarioError(f"bad scenario config: {e!r}") from None
    for user in config.users:
        if not valid_username(user.username):
            raise ScenarioError(f"invalid username {user.username!r}")
    config.validate()
    return config


def _waypoints(raw) -> tuple[Point, ...]:
    return tuple((float(p[0]), float(p[1])) for p in raw)


def load_scenario(path: str | Path) -> SimConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario is not valid JSON: line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("scenario root must be an object")
    return scenario_from_dict(doc)
