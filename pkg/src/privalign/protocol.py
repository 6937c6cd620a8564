"""Two-party privacy-preserving alignment protocol.

Alice holds the keypair and one scanpath; Bob holds the other scanpath and
runs the whole alignment on ciphertexts.  Per interior matrix cell there
is exactly one request/response round: Bob sends a masked, permuted cost
triple, Alice answers with a fresh encryption of the minimum, and Bob
inverts his masking to store the cell.  Cells are processed in uniformly
random dependency-respecting order so Alice cannot tell which cell a
request belongs to.  At the end both sides learn the score and the
sequence lengths -- nothing else.

Wire order: Bob opens with SessionConfig, Alice replies with her public
key and the encrypted substitution-cost matrix, then the min rounds run,
and a final exchange turns the last matrix cell into the plaintext score.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field

from . import masking, messages, paillier, scanpath, transport
from .errors import (
    ChannelClosedError,
    ConfigurationError,
    NegotiationError,
    ProtocolError,
)
from .masking import BoundPolicy
from .messages import PROTOCOL_VERSION, SessionConfigWire
from .nw_core import CandidateSet, CostParams
from .transport import (
    Frame,
    TAG_DIST_MATRIX,
    TAG_FINAL_REQUEST,
    TAG_FINAL_RESPONSE,
    TAG_MIN_REQUEST,
    TAG_MIN_RESPONSE,
    TAG_PUBLIC_KEY,
    TAG_SESSION_CONFIG,
)

ROLE_ALICE = transport.ROLE_ALICE
ROLE_BOB = transport.ROLE_BOB


@dataclass(frozen=True)
class ProtocolParams:
    """Locally configured session parameters; both parties must agree."""

    kappa: int
    costs: CostParams
    rho_max: int = masking.DEFAULT_RHO_MAX
    delta2_bits: int = masking.DEFAULT_DELTA2_BITS
    alphabet_size: int = scanpath.ALPHABET_SIZE
    version: int = PROTOCOL_VERSION

    def __post_init__(self) -> None:
        paillier.validate_security_parameter(self.kappa)
        if self.rho_max < 2:
            raise ConfigurationError("rho_max must be at least 2")

    def to_wire(self, seq_len: int) -> SessionConfigWire:
        p1, p2 = self.costs.model.wire_params()
        return SessionConfigWire(
            version=self.version,
            kappa=self.kappa,
            seq_len=seq_len,
            c_ins=self.costs.c_ins,
            c_del=self.costs.c_del,
            model_id=self.costs.model.model_id,
            model_p1=p1,
            model_p2=p2,
            alphabet_size=self.alphabet_size,
            rho_max=self.rho_max,
            delta2_bits=self.delta2_bits,
        )

    def check_against(self, wire: SessionConfigWire) -> None:
        """Raise NegotiationError naming every field the peer disagrees on."""
        local = self.to_wire(seq_len=wire.seq_len)
        mismatched = [
            name for name in (
                "version", "kappa", "c_ins", "c_del", "model_id",
                "model_p1", "model_p2", "alphabet_size", "rho_max",
                "delta2_bits",
            )
            if getattr(local, name) != getattr(wire, name)
        ]
        if mismatched:
            raise NegotiationError(
                "peer disagrees on session parameters: " + ", ".join(mismatched)
            )


@dataclass
class SessionResult:
    """What one party knows after a finished session."""

    role: str
    delta: int
    m: int
    n: int
    iterations: int
    wall_s: float
    cpu_s: float
    modulus: int
    ledger: transport.ByteLedger
    loop_s: float | None = None          # Bob: time inside the min rounds
    option_order_preserving: int = 0     # Bob: per-cell mask option tally
    option_scaling: int = 0
    observed_plaintexts: list[int] = field(default_factory=list)  # Alice, test mode

    @property
    def iter_mean_s(self) -> float:
        if self.iterations == 0:
            return 0.0
        base = self.loop_s if self.loop_s is not None else self.wall_s
        return base / self.iterations


def bob_compute_costs(matrix, dist, k_b, i, j, costs: CostParams,
                      pk: paillier.PublicKey, rng: random.Random):
    """Encrypted candidate costs for cell (i, j), 1-based.

    x1 = diagonal + substitution (looked up in the received cost matrix),
    x2 = left + insertion, x3 = up + deletion.
    """
    diag, left, up = matrix[i - 1][j - 1], matrix[i][j - 1], matrix[i - 1][j]
    if diag is None or left is None or up is None:
        raise ProtocolError(f"cell ({i}, {j}) selected before its dependencies")
    x1 = paillier.hom_add(pk, diag, dist[i - 1][k_b[j - 1]])
    x2 = paillier.hom_add(pk, left, paillier.encrypt(pk, costs.c_ins, rng))
    x3 = paillier.hom_add(pk, up, paillier.encrypt(pk, costs.c_del, rng))
    return x1, x2, x3


def alice_min(sk: paillier.SecretKey, pk: paillier.PublicKey,
              triple, rng: random.Random) -> paillier.Ciphertext:
    """Decrypt the masked triple, re-encrypt the smallest value freshly."""
    values = [paillier.decrypt(sk, pk, c) for c in triple]
    return paillier.encrypt(pk, min(values), rng)


class AliceSession:
    """Key-holder side: answers minimum queries, reveals only the score."""

    def __init__(self, scanpath_str: str, params: ProtocolParams,
                 keypair: tuple[paillier.SecretKey, paillier.PublicKey] | None = None,
                 rng: random.Random | None = None,
                 record_plaintexts: bool = False, workers: int = 1) -> None:
        self.scanpath = scanpath.validate_scanpath(scanpath_str)
        self.params = params
        self.keypair = keypair
        self.rng = rng if rng is not None else random.SystemRandom()
        self.record_plaintexts = record_plaintexts
        self.workers = workers

    def run(self, channel) -> SessionResult:
        wall0 = time.perf_counter()
        cpu0 = time.thread_time()

        frame = channel.recv_frame()
        if frame.tag != TAG_SESSION_CONFIG:
            raise ProtocolError("expected SessionConfig as the first frame")
        wire = messages.unpack_session_config(frame.payload)
        self.params.check_against(wire)
        n_len = wire.seq_len
        m_len = len(self.scanpath)

        if self.keypair is None:
            sk, pk = paillier.keygen(self.params.kappa, self.rng)
        else:
            sk, pk = self.keypair
        if pk.bits < paillier.MIN_MODULUS_BITS:
            raise ConfigurationError("toy keys are not allowed in protocol sessions")
        if pk.bits != self.params.kappa:
            raise ConfigurationError(
                f"loaded key has {pk.bits}-bit modulus, session wants {self.params.kappa}"
            )
        # Alice can bound-check too: everything she will decrypt must stay
        # below n/2 or residue comparison would be meaningless.
        policy = BoundPolicy.derive(self.params.costs, m_len, n_len,
                                    self.params.rho_max, self.params.delta2_bits)
        policy.validate_for_modulus(pk.n)

        channel.send_frame(Frame(TAG_PUBLIC_KEY, messages.pack_public_key(pk)))
        dist = scanpath.build_encrypted_cost_matrix(
            self.scanpath, self.params.costs.model, pk, self.rng,
            workers=self.workers, secret_key=sk,
        )
        channel.send_frame(Frame(
            TAG_DIST_MATRIX,
            messages.pack_dist_matrix(dist, self.params.alphabet_size),
        ))

        observed: list[int] = []
        iterations = 0
        while True:
            frame = channel.recv_frame()
            if frame.tag == TAG_MIN_REQUEST:
                triple = messages.unpack_ciphertexts(frame.payload, 3)
                values = [paillier.decrypt(sk, pk, c) for c in triple]
                if self.record_plaintexts:
                    observed.extend(values)
                response = paillier.encrypt(pk, min(values), self.rng)
                channel.send_frame(Frame(
                    TAG_MIN_RESPONSE, messages.pack_ciphertexts([response])
                ))
                iterations += 1
            elif frame.tag == TAG_FINAL_REQUEST:
                (final_ct,) = messages.unpack_ciphertexts(frame.payload, 1)
                delta = paillier.decrypt(sk, pk, final_ct)
                if self.record_plaintexts:
                    observed.append(delta)
                channel.send_frame(Frame(TAG_FINAL_RESPONSE, messages.pack_int(delta)))
                break
            else:
                raise ProtocolError(
                    f"unexpected frame {transport.TAG_NAMES[frame.tag]} while serving"
                )

        return SessionResult(
            role=ROLE_ALICE, delta=delta, m=m_len, n=n_len,
            iterations=iterations,
            wall_s=time.perf_counter() - wall0,
            cpu_s=time.thread_time() - cpu0,
            modulus=pk.n, ledger=channel.ledger,
            observed_plaintexts=observed,
        )


class BobSession:
    """Matrix-computing side: drives the alignment on ciphertexts."""

    def __init__(self, scanpath_str: str, params: ProtocolParams,
                 rng: random.Random | None = None) -> None:
        self.scanpath = scanpath.validate_scanpath(scanpath_str)
        self.params = params
        self.rng = rng if rng is not None else random.SystemRandom()
        self.matrix: list[list[paillier.Ciphertext | None]] = []
        self.public_key: paillier.PublicKey | None = None

    def run(self, channel) -> SessionResult:
        wall0 = time.perf_counter()
        cpu0 = time.thread_time()
        rng = self.rng
        costs = self.params.costs
        n_len = len(self.scanpath)

        channel.send_frame(Frame(
            TAG_SESSION_CONFIG,
            messages.pack_session_config(self.params.to_wire(seq_len=n_len)),
        ))
        try:
            frame = channel.recv_frame()
        except ChannelClosedError as exc:
            raise NegotiationError(
                "peer closed the channel during setup (session parameters rejected?)"
            ) from exc
        if frame.tag != TAG_PUBLIC_KEY:
            raise ProtocolError("expected PublicKey after SessionConfig")
        pk = messages.unpack_public_key(frame.payload)
        if pk.bits != self.params.kappa:
            raise NegotiationError(
                f"peer key has {pk.bits}-bit modulus, expected {self.params.kappa}"
            )
        self.public_key = pk

        frame = channel.recv_frame()
        if frame.tag != TAG_DIST_MATRIX:
            raise ProtocolError("expected DistMatrix after PublicKey")
        dist = messages.unpack_dist_matrix(frame.payload)
        m_len = len(dist)
        if any(len(row) != self.params.alphabet_size for row in dist):
            raise ProtocolError("cost matrix does not match the agreed alphabet")

        policy = BoundPolicy.derive(costs, m_len, n_len,
                                    self.params.rho_max, self.params.delta2_bits)
        policy.validate_for_modulus(pk.n)
        k_b = scanpath.index_vector(self.scanpath)

        matrix: list[list[paillier.Ciphertext | None]] = [
            [None] * (n_len + 1) for _ in range(m_len + 1)
        ]
        for i in range(m_len + 1):
            matrix[i][0] = paillier.encrypt(pk, i * costs.c_del, rng)
        for j in range(1, n_len + 1):
            matrix[0][j] = paillier.encrypt(pk, j * costs.c_ins, rng)
        self.matrix = matrix

        cset = CandidateSet(m_len, n_len)
        option_counts = [0, 0]
        iterations = 0
        loop0 = time.perf_counter()
        while len(cset):
            i, j = cset.select(rng)
            x = bob_compute_costs(matrix, dist, k_b, i, j, costs, pk, rng)
            permuted, record = masking.mask_cell(pk, x, policy, (i, j), rng)
            option_counts[record.used_order_preserving] += 1
            channel.send_frame(Frame(
                TAG_MIN_REQUEST, messages.pack_ciphertexts(permuted)
            ))
            frame = channel.recv_frame()
            if frame.tag != TAG_MIN_RESPONSE:
                raise ProtocolError("expected MinResponse to a MinRequest")
            (e_min,) = messages.unpack_ciphertexts(frame.payload, 1)
            matrix[i][j] = masking.bob_correct(pk, e_min, record, rng)
            cset.complete(i, j)
            iterations += 1
        loop_s = time.perf_counter() - loop0

        channel.send_frame(Frame(
            TAG_FINAL_REQUEST, messages.pack_ciphertexts([matrix[m_len][n_len]])
        ))
        frame = channel.recv_frame()
        if frame.tag != TAG_FINAL_RESPONSE:
            raise ProtocolError("expected FinalResponse")
        delta = messages.unpack_int(frame.payload)

        return SessionResult(
            role=ROLE_BOB, delta=delta, m=m_len, n=n_len,
            iterations=iterations,
            wall_s=time.perf_counter() - wall0,
            cpu_s=time.thread_time() - cpu0,
            modulus=pk.n, ledger=channel.ledger, loop_s=loop_s,
            option_order_preserving=option_counts[1],
            option_scaling=option_counts[0],
        )


def run_session(role: str, channel, scanpath_str: str, params: ProtocolParams,
                keypair=None, rng: random.Random | None = None,
                record_plaintexts: bool = False, workers: int = 1) -> SessionResult:
    """Run one side of a session over an open channel."""
    if role == ROLE_ALICE:
        session = AliceSession(scanpath_str, params, keypair=keypair, rng=rng,
                               record_plaintexts=record_plaintexts, workers=workers)
    elif role == ROLE_BOB:
        session = BobSession(scanpath_str, params, rng=rng)
    else:
        raise ConfigurationError(f"unknown role {role!r}")
    return session.run(channel)


def run_loopback_session(scanpath_a: str, scanpath_b: str, params: ProtocolParams,
                         keypair=None, record_plaintexts: bool = False,
                         workers: int = 1, timeout: float | None = 300.0,
                         ) -> tuple[SessionResult, SessionResult]:
    """Run both roles over an in-process channel; returns (alice, bob) results."""
    alice_end, bob_end = transport.LoopbackChannel.pair(timeout=timeout)
    alice = AliceSession(scanpath_a, params, keypair=keypair,
                         record_plaintexts=record_plaintexts, workers=workers)
    bob = BobSession(scanpath_b, params)
    results: dict[str, SessionResult] = {}
    failures: dict[str, BaseException] = {}

    def drive(name, session, channel):
        try:
            results[name] = session.run(channel)
        except BaseException as exc:  # noqa: BLE001 - propagated to caller below
            failures[name] = exc
            channel.close()

    threads = [
        threading.Thread(target=drive, args=(ROLE_ALICE, alice, alice_end)),
        threading.Thread(target=drive, args=(ROLE_BOB, bob, bob_end)),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if failures:
        primary = failures.get(ROLE_ALICE) or failures.get(ROLE_BOB)
        raise primary
    return results[ROLE_ALICE], results[ROLE_BOB]
