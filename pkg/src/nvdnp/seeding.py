"""Stable derivation of subordinate seeds from one master seed."""

import hashlib

import numpy as np


def derive_seed(seed, *labels):
    """64-bit seed from ``seed`` and any number of task labels (str or int)."""
    h = hashlib.sha256(str(int(seed)).encode())
    for label in labels:
        h.update(b"\x00" + str(label).encode())
    return int.from_bytes(h.digest()[:8], "little")


def rng_for(seed, *labels):
    return np.random.default_rng(derive_seed(seed, *labels))
