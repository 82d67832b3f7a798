"""Benchmark ingestion and generation.

Matrix Market is the interchange format: language-neutral plain text that
the usual benchmark collections convert to easily. Loading goes through a
small hand-rolled parser so failures point at the exact file and line; the
round-trip against a mainstream reader is covered in the tests.
"""

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import MatrixMarketParseError, ValidationError
from .reduction import DEFAULT_MAX_ITER, DEFAULT_TOL
from .system import LtiSystem

__all__ = [
    "SystemBundle",
    "RunConfig",
    "load_matrix_market_triple",
    "generate_heat_system",
    "read_matrix_market",
    "DEFAULT_DIFFUSIVITY",
    "METHOD_NAMES",
]

#: default conductivity of the generated heat rod; the slowest mode decays
#: like e^{-diffusivity pi^2 t}, so 0.01 puts the dominant time constant two
#: orders past t = 1 and horizon-limited behavior actually differs from the
#: unbounded problem
DEFAULT_DIFFUSIVITY = 0.01

METHOD_NAMES = ("irka", "tlirka")


def _system_checksum(A, B, C):
    """Content hash over shapes and exact float bytes of the triple."""
    h = hashlib.sha256()
    for name, M in (("A", A), ("B", B), ("C", C)):
        M = np.ascontiguousarray(M, dtype=np.float64)
        h.update(name.encode())
        h.update(repr(M.shape).encode())
        h.update(M.tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class SystemBundle:
    """A system plus where it came from.

    ``source`` is the tuple of file paths or the generator descriptor; the
    checksum covers the exact matrix bytes, so reloading unchanged inputs
    reproduces it and any entry difference shows up.
    """

    system: LtiSystem
    source: tuple
    checksum: str


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one reduction-and-evaluation run."""

    order: int
    horizon: float
    methods: tuple = METHOD_NAMES
    seed: int = 0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    out_dir: str = "out"
    plot_grid: int = 400

    def __post_init__(self):
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "tol", float(self.tol))
        object.__setattr__(self, "max_iter", int(self.max_iter))
        object.__setattr__(self, "out_dir", str(self.out_dir))
        object.__setattr__(self, "plot_grid", int(self.plot_grid))
        if self.order < 1:
            raise ValidationError(f"order must be >= 1, got {self.order}")
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ValidationError(f"horizon must be positive, got {self.horizon}")
        if not self.tol > 0:
            raise ValidationError(f"tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.seed < 0:
            raise ValidationError(f"seed must be nonnegative, got {self.seed}")
        if self.plot_grid < 2:
            raise ValidationError(f"plot_grid must be >= 2, got {self.plot_grid}")
        if not self.methods:
            raise ValidationError("methods must not be empty")
        for name in self.methods:
            if name not in METHOD_NAMES:
                raise ValidationError(
                    f"unknown method {name!r}; expected one of {METHOD_NAMES}"
                )

    def to_dict(self):
        return {
            "order": self.order,
            "horizon": self.horizon,
            "methods": list(self.methods),
            "seed": self.seed,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "out_dir": self.out_dir,
            "plot_grid": self.plot_grid,
        }

    @classmethod
    def from_dict(cls, data):
        known = {
            "order", "horizon", "methods", "seed", "tol", "max_iter",
            "out_dir", "plot_grid",
        }
        unknown = set(data) - known
        if unknown:
            raise ValidationError(
                f"unknown config keys: {', '.join(sorted(unknown))}"
            )
        missing = {"order", "horizon"} - set(data)
        if missing:
            raise ValidationError(
                f"config is missing required keys: {', '.join(sorted(missing))}"
            )
        return cls(**data)


def _fail(message, path, line=None):
    raise MatrixMarketParseError(message, path=path, line=line)


def _to_float(token, path, line):
    try:
        return float(token)
    except ValueError:
        pass
    try:
        # Fortran-style exponents (1.5D-3) appear in converted benchmark files
        return float(token.replace("D", "e").replace("d", "e"))
    except ValueError:
        _fail(f"bad numeric token {token!r}", path, line)


def _to_index(token, bound, what, path, line):
    try:
        value = int(token)
    except ValueError:
        _fail(f"bad {what} index {token!r}", path, line)
    if not 1 <= value <= bound:
        _fail(f"{what} index {value} outside 1..{bound}", path, line)
    return value - 1


def read_matrix_market(path):
    """Dense array from one Matrix Market file.

    Supports array and coordinate formats, real or integer fields, general
    or symmetric storage. Every parse failure names the file and the
    offending 1-based line.
    """
    path = str(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise MatrixMarketParseError(
            f"cannot read file: {exc}", path=path
        ) from exc
    if not lines:
        _fail("empty file", path, 1)

    banner = lines[0].split()
    if len(banner) != 5 or banner[0].lower() != "%%matrixmarket":
        _fail(
            "first line must be "
            "'%%MatrixMarket matrix <format> <field> <symmetry>'",
            path, 1,
        )
    obj, fmt, field, symmetry = (t.lower() for t in banner[1:])
    if obj != "matrix":
        _fail(f"unsupported object {obj!r}; only 'matrix'", path, 1)
    if fmt not in ("array", "coordinate"):
        _fail(f"unsupported format {fmt!r}; expected array or coordinate", path, 1)
    if field not in ("real", "integer"):
        _fail(f"unsupported field {field!r}; only real-valued matrices", path, 1)
    if symmetry not in ("general", "symmetric"):
        _fail(
            f"unsupported symmetry {symmetry!r}; expected general or symmetric",
            path, 1,
        )

    # (line number, line) pairs after the banner, comments and blanks dropped
    data = [
        (k, ln)
        for k, ln in enumerate(lines[1:], start=2)
        if ln.strip() and not ln.lstrip().startswith("%")
    ]
    if not data:
        _fail("missing size line", path, len(lines))
    size_no, size_line = data[0]
    size = size_line.split()
    want = 3 if fmt == "coordinate" else 2
    if len(size) != want:
        _fail(
            f"size line must have {want} integers for {fmt} format", path, size_no
        )
    try:
        dims = [int(t) for t in size]
    except ValueError:
        _fail(f"bad size line {size_line!r}", path, size_no)
    if any(d < 1 for d in dims[:2]):
        _fail(f"matrix dimensions must be positive, got {dims[:2]}", path, size_no)
    rows, cols = dims[0], dims[1]
    if symmetry == "symmetric" and rows != cols:
        _fail(f"symmetric matrix must be square, got {rows}x{cols}", path, size_no)
    M = np.zeros((rows, cols))

    if fmt == "array":
        if symmetry == "general":
            slots = [(i, j) for j in range(cols) for i in range(rows)]
        else:
            slots = [(i, j) for j in range(cols) for i in range(j, rows)]
        k = 0
        for line_no, line in data[1:]:
            for token in line.split():
                if k >= len(slots):
                    _fail(
                        f"more than the {len(slots)} expected entries", path, line_no
                    )
                i, j = slots[k]
                value = _to_float(token, path, line_no)
                M[i, j] = value
                if symmetry == "symmetric":
                    M[j, i] = value
                k += 1
        if k < len(slots):
            _fail(
                f"expected {len(slots)} entries, found {k}", path, data[-1][0]
            )
        return M

    nnz = dims[2]
    if nnz < 0:
        _fail(f"entry count must be nonnegative, got {nnz}", path, size_no)
    entries = data[1:]
    if len(entries) != nnz:
        where = entries[min(nnz, len(entries) - 1)][0] if entries else size_no
        _fail(f"declared {nnz} entries, found {len(entries)}", path, where)
    for line_no, line in entries:
        tokens = line.split()
        if len(tokens) != 3:
            _fail(
                f"coordinate entry needs 'i j value', got {len(tokens)} tokens",
                path, line_no,
            )
        i = _to_index(tokens[0], rows, "row", path, line_no)
        j = _to_index(tokens[1], cols, "column", path, line_no)
        value = _to_float(tokens[2], path, line_no)
        # repeated coordinates accumulate, matching the usual reader behavior
        M[i, j] += value
        if symmetry == "symmetric" and i != j:
            M[j, i] += value
    return M


def load_matrix_market_triple(path_a, path_b, path_c):
    """Load (A, B, C) from three Matrix Market files into a SystemBundle.

    Cross-file dimension mismatches name the offending file.
    """
    A = read_matrix_market(path_a)
    B = read_matrix_market(path_b)
    C = read_matrix_market(path_c)
    if A.shape[0] != A.shape[1]:
        raise ValidationError(f"A from {path_a} must be square, got {A.shape}")
    if B.shape[0] != A.shape[0]:
        raise ValidationError(
            f"B from {path_b} has {B.shape[0]} rows; A is "
            f"{A.shape[0]}x{A.shape[0]}"
        )
    if C.shape[1] != A.shape[0]:
        raise ValidationError(
            f"C from {path_c} has {C.shape[1]} columns; A is "
            f"{A.shape[0]}x{A.shape[0]}"
        )
    system = LtiSystem(A, B, C, label=Path(str(path_a)).stem)
    return SystemBundle(
        system=system,
        source=(str(path_a), str(path_b), str(path_c)),
        checksum=_system_checksum(A, B, C),
    )


def generate_heat_system(n, diffusivity=DEFAULT_DIFFUSIVITY):
    """Synthetic 1-D heat rod: central differences, Dirichlet ends.

    A = diffusivity*(n+1)^2*tridiag(1, -2, 1) over the n interior nodes, so
    the spectrum is -4*diffusivity*(n+1)^2*sin^2(k*pi/(2(n+1))) < 0 and the
    system is Hurwitz for any positive diffusivity. Heat enters at node
    floor(n/4) and the output reads the temperature at node floor(3n/4).
    """
    n = int(n)
    if n < 3:
        raise ValidationError(f"heat system needs n >= 3, got {n}")
    d = float(diffusivity)
    if not (np.isfinite(d) and d > 0):
        raise ValidationError(f"diffusivity must be positive, got {diffusivity}")
    scale = d * (n + 1) ** 2
    A = scale * (
        np.diag(np.full(n - 1, 1.0), -1)
        + np.diag(np.full(n, -2.0))
        + np.diag(np.full(n - 1, 1.0), 1)
    )
    B = np.zeros((n, 1))
    B[n // 4, 0] = 1.0
    C = np.zeros((1, n))
    C[0, (3 * n) // 4] = 1.0
    system = LtiSystem(A, B, C, label=f"heat{n}")
    return SystemBundle(
        system=system,
        source=(f"gen-heat(n={n}, diffusivity={d!r})",),
        checksum=_system_checksum(A, B, C),
    )
