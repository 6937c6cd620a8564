"""Command-line front end.

Subcommands: keygen (key files), encode (gaze CSV -> scanpath string),
compare (run one protocol role over TCP), oracle (plaintext score),
stats (candidate-count statistics CSV), bench (loopback scaling sweep).

Exit codes: 0 success, 2 input error, 3 negotiation error, 4 transport or
protocol error, 5 oracle-check failure.
"""

from __future__ import annotations

import argparse
import json
import random
import statistics
import sys

from . import paillier, scanpath, transport
from .errors import (
    InputError,
    ConfigurationError,
    NegotiationError,
    OracleCheckError,
    PrivalignError,
    ProtocolError,
    TransportError,
)
from .nw_core import CostParams, candidate_stats, plaintext_nw
from .protocol import ProtocolParams, run_loopback_session, run_session

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NEGOTIATION = 3
EXIT_TRANSPORT = 4
EXIT_ORACLE = 5

BENCH_CSV_HEADER = "m,n,kappa,mean_s,std_s,iter_s,alice_s,bob_s,bytes_total,bytes_bob"
STATS_CSV_HEADER = "iteration,mean_candidates,std_candidates,cum_log2"

# Letters reachable through the default 7x7 grid (49 of the 52).
_BENCH_LETTERS = scanpath.ALPHABET[:49]


def _parse_costs(spec: str) -> tuple[int, int]:
    try:
        ins, dele = (int(v) for v in spec.split(","))
    except ValueError:
        raise InputError(f"--costs expects 'INS,DEL', got {spec!r}") from None
    return ins, dele


def _cost_params(args) -> CostParams:
    c_ins, c_del = _parse_costs(args.costs)
    return CostParams(c_ins=c_ins, c_del=c_del, model=scanpath.parse_model(args.model))


def _parse_hostport(spec: str) -> tuple[str, int]:
    host, _, port = spec.rpartition(":")
    if not host or not port.isdigit():
        raise InputError(f"expected HOST:PORT, got {spec!r}")
    return host, int(port)


def _parse_grid(spec: str, bounds: str | None) -> scanpath.GridConfig:
    try:
        rows, cols = (int(v) for v in spec.lower().split("x"))
    except ValueError:
        raise InputError(f"--grid expects ROWSxCOLS, got {spec!r}") from None
    kwargs = {}
    if bounds:
        try:
            x_min, x_max, y_min, y_max = (float(v) for v in bounds.split(","))
        except ValueError:
            raise InputError(
                f"--bounds expects 'XMIN,XMAX,YMIN,YMAX', got {bounds!r}"
            ) from None
        kwargs = dict(x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max)
    return scanpath.GridConfig(rows=rows, cols=cols, **kwargs)


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def cmd_keygen(args) -> int:
    sk, pk = paillier.keygen(args.kappa)
    pub = {"kappa": args.kappa, "n": hex(pk.n)}
    sec = {"kappa": args.kappa, "n": hex(pk.n), "p": hex(sk.p), "q": hex(sk.q),
           "lambda": hex(sk.lam), "mu": hex(sk.mu)}
    pub_path = args.out + ".pub.json"
    sec_path = args.out + ".sec.json"
    with open(pub_path, "w", encoding="utf-8") as handle:
        json.dump(pub, handle, indent=2)
        handle.write("\n")
    with open(sec_path, "w", encoding="utf-8") as handle:
        json.dump(sec, handle, indent=2)
        handle.write("\n")
    print(f"wrote {pub_path} and {sec_path}")
    return EXIT_OK


def load_keypair(prefix: str) -> tuple[paillier.SecretKey, paillier.PublicKey]:
    with open(prefix + ".sec.json", encoding="utf-8") as handle:
        data = json.load(handle)
    try:
        pk = paillier.PublicKey.from_modulus(int(data["n"], 16))
        sk = paillier.SecretKey(
            lam=int(data["lambda"], 16), mu=int(data["mu"], 16),
            p=int(data["p"], 16), q=int(data["q"], 16),
        )
    except (KeyError, ValueError) as exc:
        raise InputError(f"bad key file {prefix}.sec.json: {exc}") from None
    return sk, pk


def cmd_encode(args) -> int:
    grid = _parse_grid(args.grid, args.bounds)
    if args.mode == "raw":
        if args.rate is None:
            raise InputError("--rate is required for raw gaze input")
        samples = scanpath.read_gaze_csv(args.input)
        params = scanpath.EncodingParams(
            sample_rate_hz=args.rate,
            min_fixation_ms=args.min_fixation_ms,
            max_run=args.max_run,
        )
        encoded = scanpath.encode_raw_gaze(samples, grid, params)
    else:
        points = scanpath.read_fixation_csv(args.input)
        encoded = scanpath.encode_fixations(points, grid)
    if not encoded:
        print("warning: input produced an empty scanpath", file=sys.stderr)
    out, should_close = _open_out(args.out)
    try:
        out.write(encoded + "\n")
    finally:
        if should_close:
            out.close()
    return EXIT_OK


def _report_json(result, oracle_delta: int | None) -> str:
    report = {
        "role": result.role,
        "delta": result.delta,
        "m": result.m,
        "n": result.n,
        "mn": result.m * result.n,
        "iterations": result.iterations,
        "wall_s": round(result.wall_s, 6),
        "iter_mean_s": round(result.iter_mean_s, 6),
        "cpu_s": round(result.cpu_s, 6),
        "bytes": result.ledger.report(),
    }
    if oracle_delta is not None:
        report["oracle_delta"] = oracle_delta
    return json.dumps(report, indent=2)


def cmd_compare(args) -> int:
    if (args.listen is None) == (args.connect is None):
        raise InputError("exactly one of --listen/--connect is required")
    costs = _cost_params(args)
    params = ProtocolParams(kappa=args.kappa, costs=costs)
    own = scanpath.read_scanpath_file(args.scanpath)

    keypair = None
    if args.role == "alice" and args.keyfile:
        keypair = load_keypair(args.keyfile)

    if args.listen:
        host, port = _parse_hostport(args.listen)
        channel = transport.TcpChannel.listen_accept(host, port, role=args.role)
    else:
        host, port = _parse_hostport(args.connect)
        channel = transport.TcpChannel.connect(host, port, role=args.role)
    try:
        result = run_session(args.role, channel, own, params,
                             keypair=keypair, workers=args.workers)
    finally:
        channel.close()

    oracle_delta = None
    if args.oracle_check:
        if not args.peer_scanpath:
            raise InputError("--oracle-check needs --peer-scanpath")
        peer = scanpath.read_scanpath_file(args.peer_scanpath)
        pair = (own, peer) if args.role == "alice" else (peer, own)
        oracle_delta = plaintext_nw(pair[0], pair[1], costs)

    print(_report_json(result, oracle_delta))
    if oracle_delta is not None and oracle_delta != result.delta:
        raise OracleCheckError(
            f"protocol score {result.delta} != plaintext score {oracle_delta}"
        )
    return EXIT_OK


def cmd_oracle(args) -> int:
    costs = _cost_params(args)
    seq_a = scanpath.read_scanpath_file(args.a)
    seq_b = scanpath.read_scanpath_file(args.b)
    print(plaintext_nw(seq_a, seq_b, costs))
    return EXIT_OK


def cmd_stats(args) -> int:
    m, n = args.size
    if m < 1 or n < 1:
        raise InputError("matrix dimensions must be at least 1")
    rng = random.Random(args.seed) if args.seed is not None else random.SystemRandom()
    stats = candidate_stats(m, n, args.trials, rng)
    out, should_close = _open_out(args.out)
    try:
        out.write(STATS_CSV_HEADER + "\n")
        for iteration, mean, std, cum in stats.rows():
            out.write(f"{iteration},{mean:.6f},{std:.6f},{cum:.6f}\n")
    finally:
        if should_close:
            out.close()
    print(
        f"overall mean candidates {stats.overall_mean:.3f} "
        f"({m}x{n}, {args.trials} trials)",
        file=sys.stderr,
    )
    return EXIT_OK


def _parse_sizes(spec: str) -> list[tuple[int, int]]:
    sizes = []
    for item in spec.split(","):
        item = item.strip()
        try:
            if "x" in item:
                m, n = (int(v) for v in item.split("x"))
            else:
                m = n = int(item)
        except ValueError:
            raise InputError(f"bad size {item!r} (use N or MxN)") from None
        if m < 1 or n < 1:
            raise InputError("bench sizes must be at least 1")
        sizes.append((m, n))
    if not sizes:
        raise InputError("no bench sizes given")
    return sizes


def _random_scanpath(length: int, rng: random.Random) -> str:
    return "".join(rng.choice(_BENCH_LETTERS) for _ in range(length))


def cmd_bench(args) -> int:
    sizes = _parse_sizes(args.sizes)
    kappas = [int(v) for v in args.kappas.split(",")]
    costs = _cost_params(args)
    letters_rng = random.Random(args.seed) if args.seed is not None else random.SystemRandom()
    out, should_close = _open_out(args.out)
    try:
        out.write(BENCH_CSV_HEADER + "\n")
        out.flush()
        for kappa in kappas:
            params = ProtocolParams(kappa=kappa, costs=costs)
            # Key generation is one-time setup, not part of comparison time.
            keypair = paillier.keygen(kappa)
            for m, n in sizes:
                walls, iters, alice_cpu, bob_cpu, totals, bobs = [], [], [], [], [], []
                for _ in range(args.trials):
                    seq_a = _random_scanpath(m, letters_rng)
                    seq_b = _random_scanpath(n, letters_rng)
                    alice_res, bob_res = run_loopback_session(
                        seq_a, seq_b, params, keypair=keypair, workers=args.workers
                    )
                    walls.append(bob_res.wall_s)
                    iters.append(bob_res.iter_mean_s)
                    alice_cpu.append(alice_res.cpu_s)
                    bob_cpu.append(bob_res.cpu_s)
                    report = bob_res.ledger.report()
                    totals.append(report["bytes_total"])
                    bobs.append(report["bytes_bob"])
                mean_s = statistics.fmean(walls)
                std_s = statistics.pstdev(walls) if len(walls) > 1 else 0.0
                out.write(
                    f"{m},{n},{kappa},{mean_s:.6f},{std_s:.6f},"
                    f"{statistics.fmean(iters):.6f},"
                    f"{statistics.fmean(alice_cpu):.6f},"
                    f"{statistics.fmean(bob_cpu):.6f},"
                    f"{round(statistics.fmean(totals))},{round(statistics.fmean(bobs))}\n"
                )
                out.flush()
    finally:
        if should_close:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privalign",
        description="Privacy-preserving scanpath comparison "
                    "(Needleman-Wunsch over Paillier ciphertexts)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a keypair and write key files")
    p.add_argument("--kappa", type=int, default=1024,
                   help="modulus bit length (512/1024/2048/3072; default 1024)")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("encode", help="encode a gaze CSV as a scanpath string")
    p.add_argument("--input", required=True, help="CSV file (t_ms,x,y or x,y)")
    p.add_argument("--mode", choices=("raw", "fixation"), default="raw")
    p.add_argument("--rate", type=float, help="sample rate in Hz (raw mode)")
    p.add_argument("--grid", default="7x7", help="grid as ROWSxCOLS (default 7x7)")
    p.add_argument("--bounds", help="coordinate bounds XMIN,XMAX,YMIN,YMAX "
                                    "(default 0,1,0,1; write --bounds=-180,... "
                                    "for negative values)")
    p.add_argument("--min-fixation-ms", type=float, default=100.0)
    p.add_argument("--max-run", type=int, default=3)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("compare", help="run one role of the two-party protocol")
    p.add_argument("--role", choices=("alice", "bob"), required=True,
                   help="alice holds the keys; bob computes the matrix")
    p.add_argument("--listen", metavar="HOST:PORT", help="wait for the peer")
    p.add_argument("--connect", metavar="HOST:PORT", help="connect to the peer")
    p.add_argument("--scanpath", required=True, help="own scanpath file")
    p.add_argument("--kappa", type=int, default=1024)
    p.add_argument("--costs", default="1,1", help="insertion,deletion (default 1,1)")
    p.add_argument("--model", default="binary:0,2",
                   help="substitution model: binary:MATCH,MISMATCH | letter | "
                        "grid:SCALE[,COLS] (default binary:0,2)")
    p.add_argument("--keyfile", help="key file prefix (alice; generated if absent)")
    p.add_argument("--workers", type=int, default=2,
                   help="threads for cost-matrix encryption (default 2)")
    p.add_argument("--oracle-check", action="store_true",
                   help="test mode: verify the score against the plaintext "
                        "reference (needs --peer-scanpath)")
    p.add_argument("--peer-scanpath", help="peer scanpath file for --oracle-check")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="plaintext alignment score, no crypto")
    p.add_argument("--a", required=True, help="first scanpath file")
    p.add_argument("--b", required=True, help="second scanpath file")
    p.add_argument("--costs", default="1,1")
    p.add_argument("--model", default="binary:0,2")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("stats", help="candidate-count statistics CSV")
    p.add_argument("--size", nargs=2, type=int, metavar=("M", "N"), required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, help="seed for reproducible output")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="loopback scaling benchmark, CSV output")
    p.add_argument("--sizes", default="8,10,20,50",
                   help="comma-separated sizes, N (square) or MxN")
    p.add_argument("--kappas", default="512")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, help="seed for synthetic scanpath letters")
    p.add_argument("--costs", default="1,1")
    p.add_argument("--model", default="binary:0,2")
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NegotiationError as exc:
        print(f"negotiation error: {exc}", file=sys.stderr)
        return EXIT_NEGOTIATION
    except (TransportError, ProtocolError) as exc:
        print(f"session error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except OracleCheckError as exc:
        print(f"oracle check failed: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except PrivalignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
