"""Random instance generators shared by the test modules."""

from __future__ import annotations

import random

from flowrack.rack import RackStateMatrix

CASE_RACK = (
    (1, 2, 9, 8, 4, 6, 2),
    (8, 10, 4, 3, 4, 6, 10),
    (8, 6, 10, 3, 10, 10, 7),
    (1, 4, 10, 7, 7, 9, 10),
    (10, 2, 3, 4, 10, 7, 3),
    (3, 1, 5, 3, 7, 8, 8),
)
CASE_REQUEST = (3, 3, 0, 5, 0, 0, 0, 0, 0, 5)
CASE_SELECTION = (
    (1, 1, 0, 0, 1, 0, 1),
    (0, 1, 1, 0, 1, 0, 1),
    (0, 0, 0, 0, 0, 0, 0),
    (1, 1, 1, 0, 0, 0, 0),
    (1, 1, 0, 1, 1, 0, 0),
    (0, 1, 0, 0, 0, 0, 0),
)


def random_rack(rng: random.Random, m: int, q: int, n: int,
                fill: float | None = None) -> RackStateMatrix:
    """Settled rack; each bin gets a random fill level."""
    rows = []
    for _ in range(m):
        k = rng.randint(0, q) if fill is None else sum(rng.random() < fill for _ in range(q))
        rows.append(tuple(rng.randint(1, n) for _ in range(k)) + (0,) * (q - k))
    return RackStateMatrix(tuple(rows), n)


def random_request(rng: random.Random, rack: RackStateMatrix, share: float = 0.5) -> tuple[int, ...]:
    """Feasible request: each rack item is requested with probability ``share``."""
    C = [0] * rack.n
    for row in rack.rows:
        for v in row:
            if v and rng.random() < share:
                C[v - 1] += 1
    return tuple(C)


def random_instance(rng: random.Random, max_m=5, max_q=5, max_n=4):
    m, q, n = rng.randint(1, max_m), rng.randint(1, max_q), rng.randint(1, max_n)
    rack = random_rack(rng, m, q, n)
    return rack, random_request(rng, rack, rng.choice((0.2, 0.4, 0.6, 0.9)))
