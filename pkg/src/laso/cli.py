"""Operator command line.

Every command prints one `LASO {json}` line per result on stdout, so
scripts can grep the stable tag and parse the rest. Secrets enter only
through files (never flags or prompts) and are never printed. Relative
paths resolve against $LASO_DIR when it is set.

Exit codes: 0 the command answered (including NOT_AUTHORIZED and
REJECTED answers), 1 operational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets as _secrets
import sys
from pathlib import Path
from random import Random

from .abe import (
    key_from_bytes,
    key_to_bytes,
    keygen,
    master_from_bytes,
    master_to_bytes,
    params_from_bytes,
    params_to_bytes,
    setup,
)
from .crypto import SEED_SIZE, AuthFailError, EpochClock, TokenSeed, password_digest
from .directory import (
    BEACON_ID_SIZE,
    BeaconRecord,
    Directory,
    UserRecord,
    load_directory,
    save_directory,
)
from .group import DEFAULT_MODULUS, GroupSuite
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
from .sim import events_to_jsonl, load_scenario, run_sim
from .wire import WireFormatError

DEFAULT_STORE = "directory.json"
DEFAULT_PARAMS = "params.lasp"
DEFAULT_MASTER = "master.lasm"


def _emit(**fields):
    print("LASO " + json.dumps(fields, sort_keys=True))


def _resolve(path: str | Path) -> Path:
    p = Path(path)
    if p.is_absolute():
        return p
    base = os.environ.get("LASO_DIR")
    return Path(base) / p if base else p


def _rng(seed: int | None) -> Random:
    return Random(_secrets.randbits(128) if seed is None else seed)


def _read_password(path: Path) -> bytes:
    data = path.read_bytes()
    # one trailing newline is an editor artifact, not part of the password
    if data.endswith(b"\r\n"):
        return data[:-2]
    if data.endswith(b"\n"):
        return data[:-1]
    return data


def _parse_attrs(text: str) -> frozenset[str]:
    attrs = frozenset(part.strip() for part in text.split(",") if part.strip())
    if not attrs:
        raise ValueError("attribute list is empty")
    return attrs


def _parse_beacon_id(text: str) -> bytes:
    try:
        raw = bytes.fromhex(text)
    except ValueError:
        raise ValueError(f"beacon id must be hex, got {text!r}") from None
    if len(raw) != BEACON_ID_SIZE:
        raise ValueError(f"beacon id must be {BEACON_ID_SIZE} bytes ({2 * BEACON_ID_SIZE} hex chars)")
    return raw


def _parse_position(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"position must be 'x,y', got {text!r}")
    return float(parts[0]), float(parts[1])


def _load_params(args):
    return params_from_bytes(_resolve(args.params).read_bytes())


def _load_store(args) -> Directory:
    return load_directory(_resolve(args.store))


def _load_or_create_store(args) -> Directory:
    path = _resolve(args.store)
    if path.exists():
        return load_directory(path)
    params_path = _resolve(args.params)
    if params_path.exists():
        suite_id = params_from_bytes(params_path.read_bytes()).suite.suite_id
    else:
        suite_id = GroupSuite(DEFAULT_MODULUS).suite_id
    return Directory(suite_id)


def _clock(period: int, at: float | None) -> EpochClock:
    if at is None:
        return EpochClock(period)
    return EpochClock(period, lambda: at)


def _write_secret(path: Path, data: bytes):
    path.write_bytes(data)
    try:
        os.chmod(path, 0o600)
    except OSError:
        pass


# command handlers

def cmd_setup(args) -> int:
    rng = _rng(args.seed)
    suite = GroupSuite(args.modulus)
    params, master = setup(suite, rng)
    out = _resolve(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params_path = out / DEFAULT_PARAMS
    master_path = out / DEFAULT_MASTER
    params_path.write_bytes(params_to_bytes(params))
    _write_secret(master_path, master_to_bytes(master))
    _emit(cmd="setup", suite=suite.suite_id, params=str(params_path), master=str(master_path))
    return 0


def cmd_keygen(args) -> int:
    params = _load_params(args)
    master = master_from_bytes(_resolve(args.master).read_bytes(), expected_suite=params.suite)
    attrs = _parse_attrs(args.attrs)
    key = keygen(params, master, attrs, _rng(args.seed))
    out = _resolve(args.out)
    _write_secret(out, key_to_bytes(key))
    _emit(cmd="keygen", user=args.user, attrs=sorted(attrs), out=str(out))
    return 0


def cmd_user_add(args) -> int:
    store = _load_or_create_store(args)
    password = _read_password(_resolve(args.password_file))
    record = UserRecord(
        username=args.name,
        password_digest=password_digest(password),
        cnonce_seed=TokenSeed(_rng(args.seed).randbytes(SEED_SIZE), "user"),
        attrs=_parse_attrs(args.attrs),
    )
    store.add_user(record)
    save_directory(store, _resolve(args.store))
    _emit(cmd="user-add", username=args.name, attrs=sorted(record.attrs), store=str(_resolve(args.store)))
    return 0


def cmd_user_list(args) -> int:
    store = _load_store(args)
    for user in store.users():
        _emit(cmd="user", username=user.username, attrs=sorted(user.attrs))
    _emit(cmd="user-list", count=len(store.users()))
    return 0


def cmd_beacon_add(args) -> int:
    store = _load_or_create_store(args)
    record = BeaconRecord(
        beacon_id=_parse_beacon_id(args.id),
        seed=TokenSeed(_rng(args.seed).randbytes(SEED_SIZE), "beacon"),
        policy_text=args.policy,
        position=_parse_position(args.pos),
        range_m=args.range,
    )
    store.add_beacon(record)
    save_directory(store, _resolve(args.store))
    _emit(cmd="beacon-add", beacon=record.beacon_id.hex(), policy=record.policy_text, store=str(_resolve(args.store)))
    return 0


def cmd_beacon_list(args) -> int:
    store = _load_store(args)
    for beacon in store.beacons():
        _emit(
            cmd="beacon",
            beacon=beacon.beacon_id.hex(),
            policy=beacon.policy_text,
            position=list(beacon.position),
            range_m=beacon.range_m,
        )
    _emit(cmd="beacon-list", count=len(store.beacons()))
    return 0


def cmd_broadcast(args) -> int:
    params = _load_params(args)
    store = _load_store(args)
    beacon = store.lookup_beacon(_parse_beacon_id(args.beacon))
    if beacon is None:
        raise ValueError(f"no beacon {args.beacon} in the store")
    frame = broadcast_to_bytes(build_broadcast(beacon, params, args.epoch, _rng(args.seed)), params)
    out = _resolve(args.out)
    out.write_bytes(frame)
    _emit(cmd="broadcast", beacon=args.beacon, epoch=args.epoch, bytes=len(frame), out=str(out))
    return 0


def cmd_extract(args) -> int:
    params = _load_params(args)
    key = key_from_bytes(_resolve(args.key).read_bytes(), expected_suite=params.suite)
    broadcast = broadcast_from_bytes(_resolve(args.infile).read_bytes(), params)
    nonce = extract_nonce(broadcast, params, key)
    # the nonce itself is a secret and never printed
    _emit(
        cmd="extract",
        beacon=broadcast.beacon_id.hex(),
        epoch=broadcast.epoch,
        authorized=nonce is not None,
    )
    return 0


def cmd_signon(args) -> int:
    params = _load_params(args)
    store = _load_store(args)
    key = key_from_bytes(_resolve(args.key).read_bytes(), expected_suite=params.suite)
    user = store.lookup_user(args.user)
    if user is None:
        raise ValueError(f"no user {args.user!r} in the store")
    if args.password_file is not None:
        pw_digest = password_digest(_read_password(_resolve(args.password_file)))
    else:
        pw_digest = user.password_digest
    broadcast = broadcast_from_bytes(_resolve(args.infile).read_bytes(), params)
    nonce = extract_nonce(broadcast, params, key)
    if nonce is None:
        _emit(cmd="signon", user=args.user, authorized=False)
        return 1
    message = build_sign_on(
        args.user,
        pw_digest,
        user.cnonce_seed,
        nonce,
        broadcast.beacon_id,
        broadcast.epoch,
        _clock(args.cnonce_period, args.time),
        _rng(args.seed),
    )
    out = _resolve(args.out)
    frame = signon_to_bytes(message)
    out.write_bytes(frame)
    _emit(cmd="signon", user=args.user, authorized=True, beacon=broadcast.beacon_id.hex(), bytes=len(frame), out=str(out))
    return 0


def cmd_verify(args) -> int:
    store = _load_store(args)
    raw = _resolve(args.infile).read_bytes()
    try:
        message = signon_from_bytes(raw)
    except WireFormatError as e:
        _emit(cmd="verify", outcome="REJECTED", reason="MALFORMED", detail=str(e))
        return 0
    result = backend_verify(
        message,
        store,
        _clock(args.nonce_period, args.time),
        _clock(args.cnonce_period, args.time),
        ReplayCache(),
    )
    if result.accepted:
        save_directory(store, _resolve(args.store))  # the location log grew
        _emit(
            cmd="verify",
            outcome="ACCEPTED",
            user=result.username,
            beacon=result.beacon_id.hex(),
            epoch=result.epoch,
        )
    else:
        _emit(cmd="verify", outcome="REJECTED", reason=result.reason.value)
    return 0


def cmd_simulate(args) -> int:
    config = load_scenario(_resolve(args.scenario))
    if args.seed is not None:
        config.seed = args.seed
    result = run_sim(config)
    metrics = result.metrics
    if args.report is not None:
        doc = {
            "header": {"format": "laso-sim-report", "version": 1, "seed": config.seed},
            "metrics": metrics.to_dict(),
            "events": [json.loads(e.to_line()) for e in result.events],
        }
        _resolve(args.report).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.events is not None:
        _resolve(args.events).write_text(events_to_jsonl(result.events), encoding="utf-8")
    _emit(
        cmd="simulate",
        steps=config.duration_steps,
        broadcasts=metrics.broadcasts,
        accepted=metrics.accepted,
        rejected=dict(sorted(metrics.rejected.items())),
        adversary_accepted=metrics.adversary_accepted,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laso",
        description="Location-aware sign-on toolkit: beacon broadcasts, sign-on envelopes, backend verification, simulation.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common_store(p):
        p.add_argument("--store", default=DEFAULT_STORE, help="directory store path (default %(default)s)")

    p = sub.add_parser("setup", help="generate public params and the master secret")
    p.add_argument("--out", default=".", help="output directory (default: LASO_DIR or cwd)")
    p.add_argument("--modulus", type=int, default=DEFAULT_MODULUS, help="group order (prime)")
    p.add_argument("--seed", type=int, help="deterministic rng seed (testing only)")
    p.set_defaults(handler=cmd_setup)

    p = sub.add_parser("keygen", help="issue an attribute key")
    p.add_argument("--attrs", required=True, help="comma-separated attribute names")
    p.add_argument("--out", required=True, help="key file to write")
    p.add_argument("--user", help="holder name, recorded in output only")
    p.add_argument("--params", default=DEFAULT_PARAMS)
    p.add_argument("--master", default=DEFAULT_MASTER)
    p.add_argument("--seed", type=int, help="deterministic rng seed (testing only)")
    p.set_defaults(handler=cmd_keygen)

    user = sub.add_parser("user", help="user records")
    usub = user.add_subparsers(dest="subcmd", required=True)
    p = usub.add_parser("add", help="enroll a user")
    p.add_argument("--name", required=True)
    p.add_argument("--password-file", required=True, help="file holding the password (one trailing newline ignored)")
    p.add_argument("--attrs", required=True, help="comma-separated attribute names")
    p.add_argument("--params", default=DEFAULT_PARAMS, help="used only to pick the suite for a fresh store")
    p.add_argument("--seed", type=int, help="deterministic rng seed (testing only)")
    common_store(p)
    p.set_defaults(handler=cmd_user_add)
    p = usub.add_parser("list", help="list users (never prints secrets)")
    common_store(p)
    p.set_defaults(handler=cmd_user_list)

    beacon = sub.add_parser("beacon", help="beacon records")
    bsub = beacon.add_subparsers(dest="subcmd", required=True)
    p = bsub.add_parser("add", help="register a beacon")
    p.add_argument("--id", required=True, help="16-byte beacon id, hex")
    p.add_argument("--policy", required=True, help="access policy text")
    p.add_argument("--pos", required=True, help="position as 'x,y'")
    p.add_argument("--range", type=float, required=True, help="radio range in meters")
    p.add_argument("--params", default=DEFAULT_PARAMS, help="used only to pick the suite for a fresh store")
    p.add_argument("--seed", type=int, help="deterministic rng seed (testing only)")
    common_store(p)
    p.set_defaults(handler=cmd_beacon_add)
    p = bsub.add_parser("list", help="list beacons (never prints seeds)")
    common_store(p)
    p.set_defaults(handler=cmd_beacon_list)

    p = sub.add_parser("broadcast", help="build one beacon advertisement frame")
    p.add_argument("--beacon", required=True, help="beacon id, hex")
    p.add_argument("--epoch", type=int, required=True)
    p.add_argument("--out", required=True, help="frame file to write")
    p.add_argument("--params", default=DEFAULT_PARAMS)
    p.add_argument("--seed", type=int, help="deterministic rng seed (testing only)")
    common_store(p)
    p.set_defaults(handler=cmd_broadcast)

    p = sub.add_parser("extract", help="try to extract the nonce from a broadcast frame")
    p.add_argument("--key", required=True, help="attribute key file")
    p.add_argument("--in", dest="infile", required=True, help="broadcast frame file")
    p.add_argument("--params", default=DEFAULT_PARAMS)
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("signon", help="build a sign-on frame answering a broadcast")
    p.add_argument("--user", required=True)
    p.add_argument("--key", required=True, help="attribute key file")
    p.add_argument("--in", dest="infile", required=True, help="broadcast frame file")
    p.add_argument("--out", required=True, help="sign-on frame file to write")
    p.add_argument("--params", default=DEFAULT_PARAMS)
    p.add_argument("--password-file", help="prove a typed password instead of the stored digest")
    p.add_argument("--time", type=float, help="clock override in seconds (default: wall clock)")
    p.add_argument("--cnonce-period", type=int, default=30)
    p.add_argument("--seed", type=int, help="deterministic rng seed (testing only)")
    common_store(p)
    p.set_defaults(handler=cmd_signon)

    p = sub.add_parser("verify", help="backend-verify a sign-on frame")
    p.add_argument("--in", dest="infile", required=True, help="sign-on frame file")
    p.add_argument("--time", type=float, help="clock override in seconds (default: wall clock)")
    p.add_argument("--nonce-period", type=int, default=60)
    p.add_argument("--cnonce-period", type=int, default=30)
    common_store(p)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("simulate", help="run a scenario deterministically")
    p.add_argument("--scenario", required=True, help="scenario config file")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--report", help="write a canonical JSON report here")
    p.add_argument("--events", help="write the event log here, one JSON object per line")
    p.set_defaults(handler=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError, AuthFailError) as e:
        print(f"laso: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
