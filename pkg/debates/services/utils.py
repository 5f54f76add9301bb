import hashlib
import json
from typing import Any


def canonical_json(value: Any) -> str:
    """Serialize with sorted keys and no whitespace so equal values hash equally."""
    return json.dumps(value, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def stable_hash(value: Any, digest_size: int = 16) -> str:
    """
    Hex BLAKE2b digest of the canonical JSON form of `value`.

    digest_size=16 gives the 128-bit run ids used across machines.
    """
    digest = hashlib.blake2b(canonical_json(value).encode('utf-8'), digest_size=digest_size)
    return digest.hexdigest()


def derive_seed(master_seed: int, identity: Any) -> int:
    """Per-debate 64-bit unsigned seed derived from the master seed and the run identity."""
    payload = canonical_json([int(master_seed), identity]).encode('utf-8')
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), 'big')
