"""Bit-packed linear algebra over GF(2).

Vectors and matrix rows are stored as Python integers (bit ``j`` is the
coefficient of column ``j``), so row XOR is word-parallel.  Convention used
throughout the package: codewords are row-vector products ``y = x G``;
``solve(A, b)`` solves the column-convention system ``A x = b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class BitVector:
    """Immutable bit string of fixed length; bit i is (bits >> i) & 1."""

    __slots__ = ("n", "bits")

    def __init__(self, n: int, bits: int = 0):
        if n < 0:
            raise ValueError("length must be nonnegative")
        self.n = n
        # out-of-range bits are zero by construction
        self.bits = bits & ((1 << n) - 1)

    @classmethod
    def zeros(cls, n: int) -> "BitVector":
        return cls(n, 0)

    @classmethod
    def from_bits(cls, bits) -> "BitVector":
        acc = 0
        count = 0
        for b in bits:
            if b & 1:
                acc |= 1 << count
            count += 1
        return cls(count, acc)

    @classmethod
    def from01(cls, s: str) -> "BitVector":
        """Parse a left-to-right bit string; s[0] is bit 0."""
        if set(s) - {"0", "1"}:
            raise ValueError(f"not a bit string: {s!r}")
        return cls(len(s), int(s[::-1], 2) if s else 0)

    @classmethod
    def from_u8(cls, arr) -> "BitVector":
        arr = np.asarray(arr, dtype=np.uint8) & 1
        packed = np.packbits(arr, bitorder="little").tobytes()
        return cls(len(arr), int.from_bytes(packed, "little"))

    def bit(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"bit index {i} out of range for length {self.n}")
        return (self.bits >> i) & 1

    def block(self, index: int, width: int) -> "BitVector":
        """Extract bits [index*width, (index+1)*width)."""
        lo = index * width
        if lo < 0 or lo + width > self.n:
            raise IndexError("block out of range")
        return BitVector(width, self.bits >> lo)

    def concat(self, other: "BitVector") -> "BitVector":
        return BitVector(self.n + other.n, self.bits | (other.bits << self.n))

    def to01(self) -> str:
        return "".join("1" if (self.bits >> i) & 1 else "0" for i in range(self.n))

    def to_u8(self) -> np.ndarray:
        nbytes = (self.n + 7) // 8
        buf = np.frombuffer(self.bits.to_bytes(nbytes, "little"), dtype=np.uint8)
        return np.unpackbits(buf, bitorder="little")[: self.n]

    def popcount(self) -> int:
        return self.bits.bit_count()

    def __len__(self) -> int:
        return self.n

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.n != other.n:
            raise ValueError(f"length mismatch: {self.n} vs {other.n}")
        return BitVector(self.n, self.bits ^ other.bits)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitVector)
            and self.n == other.n
            and self.bits == other.bits
        )

    def __hash__(self) -> int:
        return hash((self.n, self.bits))

    def __repr__(self) -> str:
        return f"BitVector({self.to01()!r})"


class BitMatrix:
    """Packed row-major GF(2) matrix; each row is an int bitset."""

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, rows: int, cols: int, data: list[int]):
        if rows < 0 or cols < 0:
            raise ValueError("dimensions must be nonnegative")
        if len(data) != rows:
            raise ValueError("row count does not match data length")
        mask = (1 << cols) - 1
        self.rows = rows
        self.cols = cols
        self._data = [r & mask for r in data]

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, [0] * rows)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, [1 << i for i in range(n)])

    @classmethod
    def from_rows(cls, rows, cols: int | None = None) -> "BitMatrix":
        """Build from an iterable of BitVector / 0-1 sequences / bit strings."""
        data = []
        width = cols
        for r in rows:
            if isinstance(r, BitVector):
                v = r
            elif isinstance(r, str):
                v = BitVector.from01(r)
            else:
                v = BitVector.from_bits(r)
            if width is None:
                width = v.n
            elif v.n != width:
                raise ValueError("ragged rows")
            data.append(v.bits)
        if width is None:
            raise ValueError("cannot infer column count from empty input")
        return cls(len(data), width, data)

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self._data[i])

    def entry(self, i: int, j: int) -> int:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError("entry out of range")
        return (self._data[i] >> j) & 1

    def transpose(self) -> "BitMatrix":
        out = [0] * self.cols
        for i, r in enumerate(self._data):
            bit = 1 << i
            while r:
                j = (r & -r).bit_length() - 1
                out[j] |= bit
                r &= r - 1
        return BitMatrix(self.cols, self.rows, out)

    def hstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.rows != other.rows:
            raise ValueError("row count mismatch")
        data = [
            a | (b << self.cols) for a, b in zip(self._data, other._data)
        ]
        return BitMatrix(self.rows, self.cols + other.cols, data)

    def submatrix_rows(self, indices) -> "BitMatrix":
        return BitMatrix(len(indices), self.cols, [self._data[i] for i in indices])

    def to_u8(self) -> np.ndarray:
        nbytes = (self.cols + 7) // 8
        buf = np.empty((self.rows, nbytes), dtype=np.uint8)
        for i, r in enumerate(self._data):
            buf[i] = np.frombuffer(r.to_bytes(nbytes, "little"), dtype=np.uint8)
        return np.unpackbits(buf, axis=1, bitorder="little")[:, : self.cols]

    @classmethod
    def from_u8(cls, arr) -> "BitMatrix":
        arr = np.asarray(arr, dtype=np.uint8) & 1
        rows, cols = arr.shape
        packed = np.packbits(arr, axis=1, bitorder="little")
        data = [int.from_bytes(packed[i].tobytes(), "little") for i in range(rows)]
        return cls(rows, cols, data)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self._data == other._data
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, tuple(self._data)))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


@dataclass(frozen=True)
class SolveResult:
    """Outcome of solve(); tag is 'unique', 'multiple' or 'inconsistent'."""

    tag: str
    solution: BitVector | None = None
    null_basis: list[BitVector] = field(default_factory=list)


def vec_mat_mul(x: BitVector, G: BitMatrix) -> BitVector:
    """Row-vector product x G: the XOR of the rows of G selected by x."""
    if x.n != G.rows:
        raise ValueError(f"dimension mismatch: vector {x.n}, matrix rows {G.rows}")
    acc = 0
    bits = x.bits
    data = G._data
    while bits:
        i = (bits & -bits).bit_length() - 1
        acc ^= data[i]
        bits &= bits - 1
    return BitVector(G.cols, acc)


def _int_rref(data: list[int], cols: int) -> tuple[list[int], list[int]]:
    """Full row reduction on int rows; returns (reduced rows, pivot columns)."""
    work = list(data)
    m = len(work)
    pivots = []
    r = 0
    for c in range(cols):
        if r == m:
            break
        p = None
        for i in range(r, m):
            if (work[i] >> c) & 1:
                p = i
                break
        if p is None:
            continue
        work[r], work[p] = work[p], work[r]
        pr = work[r]
        for i in range(m):
            if i != r and (work[i] >> c) & 1:
                work[i] ^= pr
        pivots.append(c)
        r += 1
    return work, pivots


def rank(G: BitMatrix) -> int:
    """GF(2) rank via Gaussian elimination."""
    _, pivots = _int_rref(G._data, G.cols)
    return len(pivots)


def independent_column_subset(G: BitMatrix) -> list[int]:
    """Indices of G.rows linearly independent columns (greedy left-to-right).

    Requires full row rank; the returned submatrix is invertible.
    """
    _, pivots = _int_rref(G._data, G.cols)
    if len(pivots) != G.rows:
        raise ValueError(
            f"matrix is rank-deficient: rank {len(pivots)} < rows {G.rows}"
        )
    return pivots


_WORD = np.dtype("<u8")


def pack_rows(data: list[int], width_bits: int) -> np.ndarray:
    """Pack int rows into little-endian 64-bit words, one array row each."""
    words = (width_bits + 63) // 64
    M = np.zeros((len(data), words), dtype=_WORD)
    for i, r in enumerate(data):
        M[i] = np.frombuffer(r.to_bytes(words * 8, "little"), dtype=_WORD)
    return M


def _eliminate_words(M: np.ndarray, n_cols: int) -> tuple[list[int], int]:
    """In-place full reduction over columns [0, n_cols); extra word bits
    (such as a RHS column) ride along.  Returns (pivot columns, rank)."""
    m = M.shape[0]
    pivots: list[int] = []
    row = 0
    one = np.uint64(1)
    for col in range(n_cols):
        if row == m:
            break
        wi, sh = col >> 6, np.uint64(col & 63)
        colbits = (M[:, wi] >> sh) & one
        nz = np.nonzero(colbits[row:])[0]
        if nz.size == 0:
            continue
        p = row + int(nz[0])
        if p != row:
            # the outgoing row cannot have the bit set, or it would have
            # been the pivot itself
            M[[row, p]] = M[[p, row]]
            colbits[p] = 0
            colbits[row] = one
        sel = colbits.astype(bool)
        sel[row] = False
        M[sel] ^= M[row]
        pivots.append(col)
        row += 1
    return pivots, row


def _solve_words(M: np.ndarray, n: int) -> SolveResult:
    """Solve a packed augmented system: columns [0, n) unknowns, column n RHS."""
    m = M.shape[0]
    pivots, row = _eliminate_words(M, n)
    one = np.uint64(1)
    # rows without pivots are zero in the coefficient part; a set RHS bit
    # there means the system has no solution
    rhs_wi, rhs_sh = n >> 6, np.uint64(n & 63)
    if row < m and (((M[row:, rhs_wi] >> rhs_sh) & one) != 0).any():
        return SolveResult(tag="inconsistent")
    rhs = (M[:row, rhs_wi] >> rhs_sh) & one
    sol = 0
    for i, col in enumerate(pivots):
        if rhs[i]:
            sol |= 1 << col
    solution = BitVector(n, sol)
    free_cols = [c for c in range(n) if c not in set(pivots)]
    if not free_cols:
        return SolveResult(tag="unique", solution=solution)
    mask = (1 << n) - 1
    pivot_rows = [
        int.from_bytes(M[i].tobytes(), "little") & mask for i in range(row)
    ]
    basis = []
    for f in free_cols:
        v = 1 << f
        for i, col in enumerate(pivots):
            if (pivot_rows[i] >> f) & 1:
                v |= 1 << col
        basis.append(BitVector(n, v))
    return SolveResult(tag="multiple", solution=solution, null_basis=basis)


def solve(A: BitMatrix, b: BitVector) -> SolveResult:
    """Classify and solve A x = b over GF(2).

    Returns the canonical solution (free variables zero).  When the system
    is underdetermined, null_basis spans the solution coset.  Elimination
    runs on rows packed into 64-bit words; the RHS rides along as column n.
    """
    if A.rows != b.n:
        raise ValueError(f"dimension mismatch: matrix rows {A.rows}, vector {b.n}")
    n = A.cols
    M = pack_rows(
        [r | (b.bit(i) << n) for i, r in enumerate(A._data)], n + 1
    )
    return _solve_words(M, n)


def random_matrix(rows: int, cols: int, rng: np.random.Generator) -> BitMatrix:
    """Matrix with independent fair bits; deterministic for a seeded rng."""
    if rows < 1 or cols < 1:
        raise ValueError("dimensions must be positive")
    nbytes = (cols + 7) // 8
    raw = rng.integers(0, 256, size=(rows, nbytes), dtype=np.uint8)
    mask = (1 << cols) - 1
    data = [int.from_bytes(raw[i].tobytes(), "little") & mask for i in range(rows)]
    return BitMatrix(rows, cols, data)


def random_vector(n: int, rng: np.random.Generator) -> BitVector:
    if n < 0:
        raise ValueError("length must be nonnegative")
    nbytes = (n + 7) // 8
    raw = rng.integers(0, 256, size=nbytes, dtype=np.uint8).tobytes()
    return BitVector(n, int.from_bytes(raw, "little"))


def save_matrix(G: BitMatrix, path) -> None:
    """Write the ASCII matrix format: header line, then one hex line per row.

    Row bits are packed little-endian within bytes and padded to whole bytes.
    """
    nbytes = (G.cols + 7) // 8
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"GF2 {G.rows} {G.cols}\n")
        for r in G._data:
            fh.write(r.to_bytes(nbytes, "little").hex() + "\n")


def load_matrix(path) -> BitMatrix:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "GF2":
            raise ValueError(f"bad matrix header in {path}")
        rows, cols = int(header[1]), int(header[2])
        nbytes = (cols + 7) // 8
        data = []
        for i in range(rows):
            line = fh.readline().strip()
            raw = bytes.fromhex(line)
            if len(raw) != nbytes:
                raise ValueError(f"row {i} has {len(raw)} bytes, expected {nbytes}")
            data.append(int.from_bytes(raw, "little"))
    return BitMatrix(rows, cols, data)
