"""Paillier additively homomorphic cryptosystem.

Key generation, probabilistic encryption, decryption, and the homomorphic
operations the comparison protocol is built on: ciphertext addition
(plaintext addition), scalar multiplication (plaintext scaling), and the
additive inverse.  All values are plain Python ints; the heavy modular
arithmetic goes through gmpy2.

Plaintexts live in [0, n).  Negative intermediate values are represented
as residues in [n/2, n); `encode_signed`/`decode_signed` convert between
that representation and Python's signed ints for tests and diagnostics.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass

import gmpy2

from .errors import (
    InputError,
    KeygenError,
    MalformedCiphertextError,
    NoInverseError,
)

logger = logging.getLogger("privalign.paillier")

# Smallest modulus size the protocol layer accepts.  Key sizes of
# 512/1024/2048/3072 bits correspond to roughly 56/80/112/128-bit security.
MIN_MODULUS_BITS = 512

MILLER_RABIN_ROUNDS = 64

_SYSTEM_RANDOM = random.SystemRandom()

_KEYGEN_MAX_ATTEMPTS = 100_000


def _small_primes(limit: int = 2000) -> list[int]:
    sieve = bytearray([1]) * limit
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(limit**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = b"\x00" * len(sieve[i * i :: i])
    return [i for i in range(limit) if sieve[i]]


_SMALL_PRIMES = _small_primes()


@dataclass(frozen=True)
class PublicKey:
    """Public half of a keypair: modulus n, generator g = n + 1, cached n^2."""

    n: int
    g: int
    n_squared: int

    @classmethod
    def from_modulus(cls, n: int) -> "PublicKey":
        return cls(n=n, g=n + 1, n_squared=n * n)

    @property
    def bits(self) -> int:
        return self.n.bit_length()


@dataclass(frozen=True)
class SecretKey:
    """Secret half: lam = lcm(p-1, q-1), mu = L(g^lam mod n^2)^-1 mod n.

    The primes are retained for tests and diagnostics only; decryption
    uses the lam/mu formula.
    """

    lam: int
    mu: int
    p: int
    q: int


@dataclass(frozen=True)
class Ciphertext:
    """An element of Z*_{n^2}."""

    value: int


def validate_security_parameter(kappa: int) -> int:
    """Check a modulus bit length for protocol use.

    Accepts any even kappa >= MIN_MODULUS_BITS (512, 1024, 2048 and 3072
    are the standard choices).  Raises InputError otherwise.
    """
    if not isinstance(kappa, int):
        raise InputError(f"security parameter must be an int, got {type(kappa).__name__}")
    if kappa % 2 != 0:
        raise InputError(f"security parameter must be even, got {kappa}")
    if kappa < MIN_MODULUS_BITS:
        raise InputError(
            f"security parameter {kappa} below minimum {MIN_MODULUS_BITS}"
        )
    return kappa


def is_probable_prime(n: int, rng: random.Random = _SYSTEM_RANDOM,
                      rounds: int = MILLER_RABIN_ROUNDS) -> bool:
    """Miller-Rabin test with `rounds` random bases (error < 4^-rounds)."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = gmpy2.powmod(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = gmpy2.powmod(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime(bits: int, rng: random.Random) -> int:
    # Top two bits forced so the product of two such primes has exactly
    # 2*bits bits.
    for _ in range(_KEYGEN_MAX_ATTEMPTS):
        candidate = rng.getrandbits(bits) | (1 << bits - 1) | (1 << bits - 2) | 1
        if is_probable_prime(candidate, rng):
            return candidate
    raise KeygenError(f"no {bits}-bit prime found in {_KEYGEN_MAX_ATTEMPTS} attempts")


def _derive_keys(p: int, q: int) -> tuple[SecretKey, PublicKey]:
    n = p * q
    pk = PublicKey.from_modulus(n)
    lam = math.lcm(p - 1, q - 1)
    # L(g^lam mod n^2) with L(x) = (x - 1) / n
    l_value = (int(gmpy2.powmod(pk.g, lam, pk.n_squared)) - 1) // n
    mu = mod_inverse(l_value, n)
    return SecretKey(lam=lam, mu=mu, p=p, q=q), pk


def keygen(kappa: int, rng: random.Random = _SYSTEM_RANDOM) -> tuple[SecretKey, PublicKey]:
    """Generate a keypair with a kappa-bit modulus (primes of kappa/2 bits)."""
    validate_security_parameter(kappa)
    p = _random_prime(kappa // 2, rng)
    q = p
    while q == p:
        q = _random_prime(kappa // 2, rng)
    sk, pk = _derive_keys(p, q)
    assert pk.bits == kappa
    return sk, pk


def toy_keypair(p: int, q: int) -> tuple[SecretKey, PublicKey]:
    """Keypair from caller-supplied small primes.

    Deterministic-test use only: the protocol layer rejects any key whose
    modulus is shorter than MIN_MODULUS_BITS.
    """
    if p == q:
        raise InputError("toy primes must be distinct")
    for value in (p, q):
        if not is_probable_prime(value):
            raise InputError(f"{value} is not prime")
    return _derive_keys(p, q)


def encrypt(pk: PublicKey, m: int, rng: random.Random = _SYSTEM_RANDOM,
            nonce: int | None = None) -> Ciphertext:
    """Encrypt m in [0, n) as g^m * r^n mod n^2 with a fresh uniform nonce.

    `nonce` forces r for deterministic tests; production callers leave it
    unset so encryption stays probabilistic.
    """
    if not 0 <= m < pk.n:
        raise InputError(f"plaintext {m} outside [0, {pk.n})")
    if nonce is None:
        r = rng.randrange(1, pk.n)
        while math.gcd(r, pk.n) != 1:
            r = rng.randrange(1, pk.n)
    else:
        r = nonce
    # g = n + 1, so g^m mod n^2 = 1 + n*m: one modular exponentiation total.
    g_m = (1 + pk.n * m) % pk.n_squared
    value = g_m * gmpy2.powmod(r, pk.n, pk.n_squared) % pk.n_squared
    return Ciphertext(int(value))


def encrypt_crt(sk: SecretKey, pk: PublicKey, m: int,
                rng: random.Random = _SYSTEM_RANDOM,
                nonce: int | None = None) -> Ciphertext:
    """Key-holder encryption fast path.

    Bit-exact with `encrypt`: the nonce power r^n mod n^2 is assembled from
    r^n mod p^2 and r^n mod q^2 by the Chinese remainder theorem, roughly
    halving the cost.  Only the party holding the factorization can use it
    (Alice, when she builds the substitution-cost matrix).
    """
    if not 0 <= m < pk.n:
        raise InputError(f"plaintext {m} outside [0, {pk.n})")
    if nonce is None:
        r = rng.randrange(1, pk.n)
        while math.gcd(r, pk.n) != 1:
            r = rng.randrange(1, pk.n)
    else:
        r = nonce
    p_sq = sk.p * sk.p
    q_sq = sk.q * sk.q
    a_p = gmpy2.powmod(r, pk.n, p_sq)
    a_q = gmpy2.powmod(r, pk.n, q_sq)
    # x = a_p (mod p^2), x = a_q (mod q^2)
    r_n = a_p + p_sq * ((a_q - a_p) * gmpy2.invert(p_sq, q_sq) % q_sq)
    g_m = (1 + pk.n * m) % pk.n_squared
    return Ciphertext(int(g_m * r_n % pk.n_squared))


def decrypt(sk: SecretKey, pk: PublicKey, c: Ciphertext) -> int:
    """Recover the plaintext: L(c^lam mod n^2) * mu mod n."""
    if not 0 < c.value < pk.n_squared or math.gcd(c.value, pk.n) != 1:
        raise MalformedCiphertextError("ciphertext not in Z*_{n^2}")
    u = int(gmpy2.powmod(c.value, sk.lam, pk.n_squared))
    return (u - 1) // pk.n * sk.mu % pk.n


def hom_add(pk: PublicKey, c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    """Ciphertext whose plaintext is the sum (mod n) of the operands'."""
    return Ciphertext(c1.value * c2.value % pk.n_squared)


def hom_scalar_mul(pk: PublicKey, c: Ciphertext, k: int) -> Ciphertext:
    """Ciphertext whose plaintext is k times the operand's (mod n)."""
    if not 0 <= k < pk.n:
        raise InputError(f"scalar {k} outside [0, {pk.n})")
    return Ciphertext(int(gmpy2.powmod(c.value, k, pk.n_squared)))


def hom_negate(pk: PublicKey, c: Ciphertext) -> Ciphertext:
    """Ciphertext of the additive inverse, computed as c^(n-1)."""
    return hom_scalar_mul(pk, c, pk.n - 1)


def mod_inverse(k: int, n: int) -> int:
    """Multiplicative inverse of k modulo n; NoInverseError if gcd != 1."""
    g = math.gcd(k, n)
    if g != 1:
        if 1 < g < n:
            # A nontrivial factor of a Paillier modulus showing up in a
            # random draw would break the key; worth shouting about.
            logger.warning("mod_inverse found nontrivial gcd %d with modulus", g)
        raise NoInverseError(f"gcd({k}, n) = {g}, no inverse")
    return int(gmpy2.invert(k, n))


def encode_signed(v: int, n: int) -> int:
    """Map a signed integer with |v| < n/2 into [0, n)."""
    if abs(v) * 2 >= n:
        raise InputError(f"|{v}| >= n/2, cannot represent")
    return v % n


def decode_signed(p: int, n: int) -> int:
    """Inverse of encode_signed: residues >= n/2 decode as negative."""
    if not 0 <= p < n:
        raise InputError(f"residue {p} outside [0, {n})")
    return p - n if p * 2 >= n else p
