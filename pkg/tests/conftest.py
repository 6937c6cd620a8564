import random

import pytest

from privalign import paillier
from privalign.nw_core import CostParams

# 64-bit primes, fixed so tests are deterministic.  The resulting 127-bit
# modulus is far too small for real use but leaves plenty of headroom for
# mask round-trips under the default bound policy.
TOY_P_64 = 9223372036854788173
TOY_Q_64 = 9223372036855553597


@pytest.fixture(scope="session")
def toy35():
    """The tiny worked-example key: p=5, q=7, n=35."""
    return paillier.toy_keypair(5, 7)


@pytest.fixture(scope="session")
def toy128():
    """Deterministic 127-bit key for fast masking/protocol-piece tests."""
    return paillier.toy_keypair(TOY_P_64, TOY_Q_64)


@pytest.fixture(scope="session")
def key512():
    """One real 512-bit keypair shared across the suite (keygen is slow)."""
    return paillier.keygen(512)


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def brute_force_alignment_cost(seq1, seq2, costs: CostParams) -> int:
    """Independent reference scorer: plain recursion over the three edits.

    Deliberately written as a top-down recursion with memoisation, not a
    DP table, so it shares no structure with the implementation under test.
    """
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == 0 and j == 0:
            return 0
        best = None
        if i > 0 and j > 0:
            best = go(i - 1, j - 1) + costs.model.cost(seq1[i - 1], seq2[j - 1])
        if i > 0:
            cand = go(i - 1, j) + costs.c_del
            best = cand if best is None else min(best, cand)
        if j > 0:
            cand = go(i, j - 1) + costs.c_ins
            best = cand if best is None else min(best, cand)
        return best

    return go(len(seq1), len(seq2))
