"""Gaze-to-string encoding and substitution-cost models.

Scanpaths are strings over a fixed 52-letter alphabet (A-Z then a-z).
Raw gaze is quantized on a rows x cols grid (default 7x7, so 49 of the 52
letters are reachable); dwells shorter than the minimum fixation duration
are dropped, surviving dwells are downsampled and capped at a maximum run
length.  Fixation lists skip the reduction step entirely.

The cost models are pluggable; each assigns a nonnegative integer cost to
any letter pair and is symmetric with S(a, a) <= S(a, b).
"""

from __future__ import annotations

import csv
import math
import random
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import gmpy2

from . import paillier
from .errors import InputError

ALPHABET = string.ascii_uppercase + string.ascii_lowercase
ALPHABET_SIZE = len(ALPHABET)  # 52

_LETTER_INDEX = {ch: i for i, ch in enumerate(ALPHABET)}


def letter_index(letter: str) -> int:
    """Position of a letter in the alphabet (A=0 .. z=51)."""
    try:
        return _LETTER_INDEX[letter]
    except KeyError:
        raise InputError(f"{letter!r} is not in the scanpath alphabet") from None


def index_vector(scanpath: str) -> list[int]:
    """Alphabet index of every symbol, in order."""
    return [letter_index(ch) for ch in scanpath]


def validate_scanpath(scanpath: str) -> str:
    for ch in scanpath:
        letter_index(ch)
    return scanpath


@dataclass(frozen=True)
class GridConfig:
    rows: int = 7
    cols: int = 7
    x_min: float = 0.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise InputError("grid dimensions must be positive")
        if self.rows * self.cols > ALPHABET_SIZE:
            raise InputError(
                f"{self.rows}x{self.cols} grid needs more than {ALPHABET_SIZE} letters"
            )
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise InputError("grid bounds are degenerate")


@dataclass(frozen=True)
class EncodingParams:
    sample_rate_hz: float
    min_fixation_ms: float = 100.0
    max_run: int = 3

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0:
            raise InputError("sample rate must be positive")
        if self.min_fixation_ms <= 0:
            raise InputError("minimum fixation duration must be positive")
        if self.max_run < 1:
            raise InputError("max_run must be at least 1")

    @property
    def downsample_factor(self) -> int:
        """Samples spanning one minimum fixation, N = round(rate * duration)."""
        return max(1, round(self.sample_rate_hz * self.min_fixation_ms / 1000.0))


@dataclass(frozen=True)
class GazeSample:
    t_ms: float
    x: float
    y: float


def _bin_index(value: float, lo: float, hi: float, cells: int) -> int:
    # Out-of-range coordinates clamp to the nearest edge cell.
    idx = int((value - lo) / (hi - lo) * cells)
    return min(max(idx, 0), cells - 1)


def quantize(x: float, y: float, grid: GridConfig) -> str:
    """Letter for the grid cell containing (x, y); row-major cell order."""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InputError(f"non-finite gaze coordinates ({x}, {y})")
    row = _bin_index(y, grid.y_min, grid.y_max, grid.rows)
    col = _bin_index(x, grid.x_min, grid.x_max, grid.cols)
    return ALPHABET[row * grid.cols + col]


def _runs(letters: list[str]) -> list[tuple[str, int]]:
    runs: list[tuple[str, int]] = []
    for ch in letters:
        if runs and runs[-1][0] == ch:
            runs[-1] = (ch, runs[-1][1] + 1)
        else:
            runs.append((ch, 1))
    return runs


def encode_raw_gaze(samples: list[GazeSample], grid: GridConfig,
                    params: EncodingParams) -> str:
    """String encoding of a raw gaze recording.

    Pipeline: quantize each sample; drop dwells shorter than the minimum
    fixation (N samples); merge dwells made adjacent by the drop;
    downsample each remaining dwell by N (ceil); cap runs at max_run.
    """
    letters = [quantize(s.x, s.y, grid) for s in samples]
    n = params.downsample_factor
    kept = [run for run in _runs(letters) if run[1] >= n]
    out: list[str] = []
    for ch, length in _merge(kept):
        count = min(-(-length // n), params.max_run)
        out.append(ch * count)
    return "".join(out)


def _merge(runs: list[tuple[str, int]]) -> list[tuple[str, int]]:
    merged: list[tuple[str, int]] = []
    for ch, length in runs:
        if merged and merged[-1][0] == ch:
            merged[-1] = (ch, merged[-1][1] + length)
        else:
            merged.append((ch, length))
    return merged


def encode_fixations(fixations: list[tuple[float, float]], grid: GridConfig) -> str:
    """One letter per fixation, in visit order; no run reduction."""
    return "".join(quantize(x, y, grid) for x, y in fixations)


class BinaryCost:
    """Flat cost: match_cost on equal letters, mismatch_cost otherwise."""

    model_id = 1

    def __init__(self, match_cost: int = 0, mismatch_cost: int = 2) -> None:
        if match_cost < 0 or mismatch_cost < 0:
            raise InputError("costs must be nonnegative")
        if match_cost > mismatch_cost:
            raise InputError("match cost must not exceed mismatch cost")
        self.match_cost = match_cost
        self.mismatch_cost = mismatch_cost

    def cost(self, a: str, b: str) -> int:
        letter_index(a), letter_index(b)
        return self.match_cost if a == b else self.mismatch_cost

    def max_cost(self) -> int:
        return self.mismatch_cost

    def wire_params(self) -> tuple[int, int]:
        return self.match_cost, self.mismatch_cost

    def describe(self) -> str:
        return f"binary:{self.match_cost},{self.mismatch_cost}"


class LetterIndexCost:
    """Absolute difference of alphabet indices."""

    model_id = 2

    def cost(self, a: str, b: str) -> int:
        return abs(letter_index(a) - letter_index(b))

    def max_cost(self) -> int:
        return ALPHABET_SIZE - 1

    def wire_params(self) -> tuple[int, int]:
        return 0, 0

    def describe(self) -> str:
        return "letter"


class GridManhattanCost:
    """Manhattan distance between grid cells, scaled.

    Letters map to cells row-major with `cols` columns (the alphabet's three
    letters beyond a 7x7 grid land on a phantom row; they never occur in
    grid-encoded scanpaths but still get defined costs in the matrix).
    """

    model_id = 3

    def __init__(self, scale: int = 1, cols: int = 7) -> None:
        if scale < 0:
            raise InputError("scale must be nonnegative")
        if cols < 1:
            raise InputError("cols must be positive")
        self.scale = scale
        self.cols = cols

    def cost(self, a: str, b: str) -> int:
        ia, ib = letter_index(a), letter_index(b)
        dr = abs(ia // self.cols - ib // self.cols)
        dc = abs(ia % self.cols - ib % self.cols)
        return self.scale * (dr + dc)

    def max_cost(self) -> int:
        last = ALPHABET_SIZE - 1
        return self.scale * (last // self.cols + min(last, self.cols - 1))

    def wire_params(self) -> tuple[int, int]:
        return self.scale, self.cols

    def describe(self) -> str:
        return f"grid:{self.scale},{self.cols}"


_MODEL_CLASSES = {cls.model_id: cls for cls in (BinaryCost, LetterIndexCost, GridManhattanCost)}


def model_from_wire(model_id: int, p1: int, p2: int):
    if model_id == BinaryCost.model_id:
        return BinaryCost(p1, p2)
    if model_id == LetterIndexCost.model_id:
        return LetterIndexCost()
    if model_id == GridManhattanCost.model_id:
        return GridManhattanCost(p1, p2)
    raise InputError(f"unknown cost model id {model_id}")


def parse_model(spec: str):
    """Parse a CLI model spec: binary[:match,mismatch] | letter | grid[:scale[,cols]]."""
    name, _, args = spec.partition(":")
    try:
        if name == "binary":
            if args:
                match_cost, mismatch_cost = (int(v) for v in args.split(","))
                return BinaryCost(match_cost, mismatch_cost)
            return BinaryCost()
        if name == "letter":
            return LetterIndexCost()
        if name == "grid":
            if args:
                parts = [int(v) for v in args.split(",")]
                return GridManhattanCost(*parts)
            return GridManhattanCost()
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad cost model spec {spec!r}: {exc}") from None
    raise InputError(f"unknown cost model {name!r}")


def build_encrypted_cost_matrix(scanpath: str, model, pk: paillier.PublicKey,
                                rng: random.Random | None = None,
                                workers: int = 1,
                                secret_key: paillier.SecretKey | None = None,
                                ) -> list[list[paillier.Ciphertext]]:
    """Fresh encryption of S(scanpath[i], letter) for every letter, per row.

    The matrix builder is the key holder, so when `secret_key` is passed the
    CRT encryption fast path is used.  Rows may be encrypted in parallel;
    each worker thread pulls nonces from its own SystemRandom so randomness
    streams stay independent.
    """
    validate_scanpath(scanpath)
    plain_rows = [[model.cost(ch, letter) for letter in ALPHABET] for ch in scanpath]
    if secret_key is not None:
        def enc(value, source):
            return paillier.encrypt_crt(secret_key, pk, value, source)
    else:
        def enc(value, source):
            return paillier.encrypt(pk, value, source)

    if workers <= 1 or len(plain_rows) < 2 * workers:
        local = rng if rng is not None else random.SystemRandom()
        return [[enc(v, local) for v in row] for row in plain_rows]

    def encrypt_rows(rows: list[list[int]]) -> list[list[paillier.Ciphertext]]:
        gmpy2.get_context().allow_release_gil = True
        local = random.SystemRandom()
        return [[enc(v, local) for v in row] for row in rows]

    chunks = [plain_rows[i::workers] for i in range(workers)]
    with ThreadPoolExecutor(workers) as pool:
        results = list(pool.map(encrypt_rows, chunks))
    matrix: list[list[paillier.Ciphertext]] = [None] * len(plain_rows)  # type: ignore[list-item]
    for offset, chunk_result in enumerate(results):
        for k, row in enumerate(chunk_result):
            matrix[offset + k * workers] = row
    return matrix


def read_gaze_csv(path: str) -> list[GazeSample]:
    """Load raw gaze samples from a `t_ms,x,y` CSV."""
    samples = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t_ms", "x", "y"]:
            raise InputError(f"{path}: expected header 't_ms,x,y', got {header}")
        last_t = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t, x, y = (float(v) for v in row)
            except ValueError:
                raise InputError(f"{path}: row {lineno}: cannot parse {row}") from None
            if last_t is not None and t < last_t:
                raise InputError(f"{path}: row {lineno}: timestamps decrease")
            last_t = t
            samples.append(GazeSample(t, x, y))
    return samples


def read_fixation_csv(path: str) -> list[tuple[float, float]]:
    """Load fixation points from an `x,y` CSV."""
    points = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "y"]:
            raise InputError(f"{path}: expected header 'x,y', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                x, y = (float(v) for v in row)
            except ValueError:
                raise InputError(f"{path}: row {lineno}: cannot parse {row}") from None
            points.append((x, y))
    return points


def read_scanpath_file(path: str) -> str:
    """First scanpath in a one-string-per-line text file."""
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                return validate_scanpath(line)
    return ""
