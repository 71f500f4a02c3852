"""Location-aware sign-on toolkit.

Beacons broadcast an epoch nonce sealed under a ciphertext-policy
attribute-based KEM; clients whose attribute keys satisfy the policy
recover it and answer with a two-layer sign-on envelope that the
backend verifies against per-user rolling c-nonces and password
digests. Includes a deterministic mobility simulator and an operator
CLI.
"""

from .abe import (
    AbeCiphertext,
    AttributeKey,
    MasterSecret,
    PublicParams,
    decapsulate,
    encapsulate,
    keygen,
    setup,
)
from .crypto import Envelope, EpochClock, SymmetricKey, TokenSeed, derive_key, open_envelope, seal, token_nonce
from .directory import BeaconRecord, Directory, UserRecord, load_directory, save_directory
from .group import DEFAULT_MODULUS, G1Element, GroupSuite, GTElement, pairing, suite_from_id
from .policy import (
    AccessPolicy,
    LsssProgram,
    SatisfactionWitness,
    compile_lsss,
    eval_boolean,
    find_witness,
    format_policy,
    parse_policy,
)
from .protocol import (
    BeaconBroadcast,
    LocationSignOn,
    RejectReason,
    ReplayCache,
    VerifyResult,
    backend_verify,
    build_broadcast,
    build_sign_on,
    extract_nonce,
)
from .sim import SimConfig, SimResult, load_scenario, run_sim, summarize

__version__ = "0.1.0"
