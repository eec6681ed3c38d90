"""Deterministic seed fan-out for multi-run experiments.

Every run derives its streams from (master_seed, run_index, stream role), and
policy streams additionally mix in a hash of the policy label. Streams for
different roles or labels are therefore independent: adding, removing, or
reconfiguring one policy never shifts the randomness seen by the environment
or by any other policy.
"""

from __future__ import annotations

import hashlib

import numpy as np

_STREAMS = {"env": 0, "policy": 1, "subsample": 2}


def label_entropy(label: str) -> int:
    """Stable 64-bit integer derived from a text label."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stream_seed(master_seed: int, run_index: int, stream: str, label: str | None = None):
    """SeedSequence for one (run, role) stream; pass to numpy's default_rng."""
    entropy = [int(master_seed), int(run_index), _STREAMS[stream]]
    if label is not None:
        entropy.append(label_entropy(label))
    return np.random.SeedSequence(entropy)
