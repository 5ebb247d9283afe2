# Copyright (c) 2026, the dpsd authors
import secrets
import struct
import typing
import numpy as np
import xxhash

# Tags keep the public hash seeds and the secret noise streams in separate derivation domains
PUBLIC_SEED_TAG = 1
NOISE_TAG = 2


def new_master_seed() -> int:
    """
    Draw a fresh 64-bit master seed from OS entropy.
    :return:
    """
    return secrets.randbits(64)


def new_public_seed() -> bytes:
    return secrets.token_bytes(32)


def _counter_bytes(master: int, counters: typing.Sequence[int], lane: int) -> bytes:
    # Fixed width little-endian encoding, so derivation is identical on every machine
    return struct.pack(f'<QQ{len(counters)}Q', int(master) & 0xFFFFFFFFFFFFFFFF, lane,
                       *(int(counter) & 0xFFFFFFFFFFFFFFFF for counter in counters))


def derive_seed(master: int, *counters: int) -> bytes:
    """
    Derive a 32-byte seed from a master seed and a sequence of counters
    :param master: The 64-bit master seed
    :param counters: Identifying counters, such as (tag, copy index)
    :return: 32 bytes
    """
    return (xxhash.xxh3_128_digest(_counter_bytes(master, counters, 0)) +
            xxhash.xxh3_128_digest(_counter_bytes(master, counters, 1)))


def derive_rng(master: int, *counters: int) -> np.random.Generator:
    """
    Derive an independent numpy random generator for a particular counter tuple.
    :param master: The 64-bit master seed
    :param counters: Identifying counters, such as (tag, string index, copy index)
    :return:
    """
    words = [
        xxhash.xxh3_64_intdigest(_counter_bytes(master, counters, lane))
        for lane in range(4)
    ]
    return np.random.default_rng(words)
