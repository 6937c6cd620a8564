"""Multi-layer masking of the per-cell cost triple.

Before the key holder is asked for a minimum, the three encrypted editing
costs are disguised in three layers: an order-preserving mask (one of two
options, coin-flipped per cell), an affine transform, and a random
permutation.  The bound policy sizes every random so the masked plaintexts
stay far below n/2 and residue comparison never wraps.

Option 1 scales each element by rho1.  Option 2 maps x_i to
rho1*x_i - sum(others), which multiplies pairwise differences by rho1 + 1
and therefore keeps the ordering; its inverse needs the sum of the
original elements, which only the masking party has.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import ConfigurationError, NoInverseError
from .paillier import (
    Ciphertext,
    PublicKey,
    encrypt,
    hom_add,
    hom_negate,
    hom_scalar_mul,
    mod_inverse,
)
from .nw_core import CostParams

DEFAULT_RHO_MAX = 1 << 16
DEFAULT_DELTA2_BITS = 64

_SAMPLE_MAX_TRIES = 1000

Triple = tuple[Ciphertext, Ciphertext, Ciphertext]


@dataclass(frozen=True)
class BoundPolicy:
    """Caps on matrix entries and masking randoms.

    matrix_bound (B) bounds every alignment-matrix entry and cost triple:
    any path to a cell takes at most m+n steps of at most max_cost each,
    plus one more step for the candidate costs.  delta1 in [2B, 4B] shifts
    the most negative option-2 value (-2B) back to nonnegative.
    """

    max_cost: int
    matrix_bound: int
    rho_max: int = DEFAULT_RHO_MAX
    delta1_lo: int = 0
    delta1_hi: int = 0
    delta2_bits: int = DEFAULT_DELTA2_BITS

    @classmethod
    def derive(cls, costs: CostParams, m: int, n: int,
               rho_max: int = DEFAULT_RHO_MAX,
               delta2_bits: int = DEFAULT_DELTA2_BITS) -> "BoundPolicy":
        max_cost = costs.max_cost
        bound = max_cost * (m + n + 1)
        return cls(
            max_cost=max_cost,
            matrix_bound=bound,
            rho_max=rho_max,
            delta1_lo=2 * bound,
            delta1_hi=4 * bound,
            delta2_bits=delta2_bits,
        )

    def masked_ceiling(self) -> int:
        """Largest plaintext the key holder can ever be handed."""
        return (self.rho_max * (self.rho_max * self.matrix_bound + self.delta1_hi)
                + (1 << self.delta2_bits))

    def validate_for_modulus(self, n: int) -> None:
        if self.masked_ceiling() >= n // 2:
            raise ConfigurationError(
                f"bound policy ceiling {self.masked_ceiling()} reaches n/2; "
                "costs or sequence lengths too large for this key size"
            )


@dataclass
class MaskRecord:
    """Everything the masking party needs to invert one cell's masking."""

    used_order_preserving: bool
    rho1: int
    rho2: int
    delta1: int
    delta2: int
    x1: Ciphertext
    x2: Ciphertext
    x3: Ciphertext
    pi: tuple[int, int, int]
    cell: tuple[int, int]


def sample_rho(pk: PublicKey, rho_max: int, rng: random.Random,
               shifted: bool = False) -> int:
    """Random rho in [2, rho_max] with gcd(rho, n) = 1 (gcd(rho+1, n) = 1
    when `shifted`, as the order-preserving inverse divides by rho + 1)."""
    for _ in range(_SAMPLE_MAX_TRIES):
        rho = rng.randint(2, rho_max)
        try:
            mod_inverse(rho + 1 if shifted else rho, pk.n)
        except NoInverseError:
            continue
        return rho
    raise ConfigurationError("could not sample an invertible rho")


def sample_deltas(policy: BoundPolicy, rng: random.Random) -> tuple[int, int]:
    delta1 = rng.randint(policy.delta1_lo, policy.delta1_hi)
    delta2 = rng.randrange(1 << policy.delta2_bits)
    return delta1, delta2


def mask_triple_signed(x: tuple[int, int, int], rho1: int) -> tuple[int, int, int]:
    """Signed-domain view of the order-preserving mask (reference math).

    x_i' = rho1*x_i - sum(x_j for j != i); differences scale by rho1 + 1,
    so strict order and ties survive.
    """
    total = sum(x)
    return tuple(rho1 * xi - (total - xi) for xi in x)  # type: ignore[return-value]


def unmask_signed(masked_min: int, x: tuple[int, int, int], rho1: int) -> int:
    """Inverse of the signed mask on the minimum: (x' + sum(x)) / (rho1 + 1)."""
    return (masked_min + sum(x)) // (rho1 + 1)


def apply_order_preserving_mask(pk: PublicKey, x: Triple, rho1: int) -> Triple:
    """Encrypted order-preserving mask: x_i' = (x_i (*) rho1) (+) -x_j (+) -x_k."""
    neg = [hom_negate(pk, c) for c in x]
    out = []
    for i in range(3):
        c = hom_scalar_mul(pk, x[i], rho1)
        for j in range(3):
            if j != i:
                c = hom_add(pk, c, neg[j])
        out.append(c)
    return tuple(out)  # type: ignore[return-value]


def apply_scaling_mask(pk: PublicKey, x: Triple, rho1: int) -> Triple:
    """Encrypted scaling mask: x_i' = x_i (*) rho1."""
    return tuple(hom_scalar_mul(pk, c, rho1) for c in x)  # type: ignore[return-value]


def apply_affine(pk: PublicKey, x_prime: Triple, rho2: int, delta1: int,
                 delta2: int, rng: random.Random) -> Triple:
    """x_i'' = (rho2 (*) (x_i' (+) E(delta1))) (+) E(delta2)."""
    e_d1 = encrypt(pk, delta1 % pk.n, rng)
    e_d2 = encrypt(pk, delta2 % pk.n, rng)
    return tuple(
        hom_add(pk, hom_scalar_mul(pk, hom_add(pk, c, e_d1), rho2), e_d2)
        for c in x_prime
    )  # type: ignore[return-value]


def permute_triple(x: Triple, rng: random.Random) -> tuple[Triple, tuple[int, int, int]]:
    """Uniform Fisher-Yates shuffle; returns (shuffled, source-index order)."""
    order = [0, 1, 2]
    for i in (2, 1):
        j = rng.randint(0, i)
        order[i], order[j] = order[j], order[i]
    pi = tuple(order)
    return tuple(x[k] for k in pi), pi  # type: ignore[return-value]


def mask_cell(pk: PublicKey, x: Triple, policy: BoundPolicy, cell: tuple[int, int],
              rng: random.Random,
              order_preserving: bool | None = None) -> tuple[Triple, MaskRecord]:
    """Full masking pipeline for one cost triple: mask, affine, permute.

    The mask option is coin-flipped unless `order_preserving` pins it
    (tests exercise each option separately).
    """
    if order_preserving is None:
        use_order_preserving = bool(rng.getrandbits(1))
    else:
        use_order_preserving = order_preserving
    rho1 = sample_rho(pk, policy.rho_max, rng, shifted=use_order_preserving)
    if use_order_preserving:
        x_prime = apply_order_preserving_mask(pk, x, rho1)
    else:
        x_prime = apply_scaling_mask(pk, x, rho1)
    rho2 = sample_rho(pk, policy.rho_max, rng)
    delta1, delta2 = sample_deltas(policy, rng)
    x_second = apply_affine(pk, x_prime, rho2, delta1, delta2, rng)
    permuted, pi = permute_triple(x_second, rng)
    record = MaskRecord(
        used_order_preserving=use_order_preserving,
        rho1=rho1, rho2=rho2, delta1=delta1, delta2=delta2,
        x1=x[0], x2=x[1], x3=x[2], pi=pi, cell=cell,
    )
    return permuted, record


def bob_correct(pk: PublicKey, e_min: Ciphertext, record: MaskRecord,
                rng: random.Random) -> Ciphertext:
    """Invert the masking on the returned encrypted minimum.

    First the affine layer: x_min' = (E(min) (+) E(-delta2)) (*) rho2^-1
    (+) E(-delta1).  Then the order mask: divide by rho1 (scaling option)
    or add back the triple's sum and divide by rho1 + 1 (order-preserving
    option).  The permutation needs no reversal.
    """
    n = pk.n
    t = hom_add(pk, e_min, encrypt(pk, (-record.delta2) % n, rng))
    t = hom_scalar_mul(pk, t, mod_inverse(record.rho2, n))
    x_min_prime = hom_add(pk, t, encrypt(pk, (-record.delta1) % n, rng))
    if not record.used_order_preserving:
        return hom_scalar_mul(pk, x_min_prime, mod_inverse(record.rho1, n))
    total = hom_add(pk, hom_add(pk, record.x1, record.x2), record.x3)
    return hom_scalar_mul(pk, hom_add(pk, x_min_prime, total),
                          mod_inverse(record.rho1 + 1, n))
