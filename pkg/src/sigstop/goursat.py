"""Signature kernels as solutions of the Goursat problem.

``pde_solve`` integrates ``d^2u/ds dt = <dx, dy> u`` with ``u = 1`` on both
axes over a grid of increment inner products, ``first_order_gram`` assembles
the kernel values of every pair of path prefixes of two ensembles, and
``truncated_sig_kernel`` is a brute-force tensor-algebra reference used to
check both.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._pde import SCHEMES, solve_batch
from .paths import Ensemble, Path

DEFAULT_REFINE = 8
DEFAULT_SCHEME = "averaged"

# batch size (number of PDEs) handed to the compiled kernel per call
_BATCH = 1 << 16


def _check_refine(refine) -> int:
    if int(refine) != refine or refine < 1:
        raise ValueError(f"refine must be a positive integer, got {refine!r}")
    return int(refine)


def _check_scheme(scheme: str) -> str:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}")
    return scheme


def pde_solve(M, full: bool = True, refine: int = DEFAULT_REFINE,
              scheme: str = DEFAULT_SCHEME):
    """Solve one Goursat problem driven by the increment matrix ``M`` (P x Q).

    Each grid cell is split into ``refine x refine`` subcells carrying
    ``M[p, q] / refine**2`` each.  Schemes, with ``m`` the subcell increment
    and ``u00, u01, u10`` the known corners:

    * ``"explicit"``: ``u11 = u10 + u01 - u00 + m * u00`` (first order)
    * ``"averaged"``: ``u11 = u10 + u01 - u00 + m * (u10 + u01) / 2`` (second order, default)
    * ``"taylor"``: ``u11 = (u10 + u01)(1 + m/2 + m^2/12) - u00 (1 - m^2/12)``

    Returns the ``(P + 1) x (Q + 1)`` node solution, or ``u[P, Q]`` when
    ``full`` is false.
    """
    refine = _check_refine(refine)
    _check_scheme(scheme)
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"M must be a nonempty matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("M has non-finite entries")
    res = solve_batch(M[:, :, None], refine, scheme, full)
    return res[:, :, 0] if full else float(res[0])


@dataclass(frozen=True, eq=False)
class GramTensor:
    """Kernel values of prefix pairs, stored time-major as ``(P+1, Q+1, m, n)``.

    ``g`` exposes the ``[i, j, p, q]`` view; a terminal-only tensor stores a
    single ``(1, 1, m, n)`` slice.
    """

    data: np.ndarray
    full: bool
    times_x: Optional[np.ndarray] = None
    times_y: Optional[np.ndarray] = None

    @property
    def g(self) -> np.ndarray:
        if not self.full:
            return self.data[0, 0]
        return np.moveaxis(self.data, (0, 1), (2, 3))

    @property
    def terminal(self) -> np.ndarray:
        return self.data[-1, -1]

    @property
    def shape(self) -> tuple:
        return self.g.shape

    @property
    def sample_sizes(self) -> tuple[int, int]:
        return self.data.shape[2], self.data.shape[3]

    def diagonal_slices(self) -> np.ndarray:
        """``(P + 1, m, n)`` stack of ``g[:, :, p, p]``."""
        if not self.full:
            raise ValueError("diagonal slices need a full Gram tensor")
        P1, Q1 = self.data.shape[:2]
        if P1 != Q1:
            raise ValueError("diagonal slices need equal grid lengths")
        return self.data[np.arange(P1), np.arange(P1)]

    def to_bytes(self) -> bytes:
        """Little-endian ``<4q`` header ``(m, n, P+1, Q+1)`` then float64 data in ``[i, j, p, q]`` order.

        Terminal-only tensors use ``P+1 = Q+1 = 1``.
        """
        m, n = self.sample_sizes
        P1, Q1 = self.data.shape[:2] if self.full else (1, 1)
        body = np.ascontiguousarray(self.g if self.full else self.terminal, dtype="<f8")
        return struct.pack("<4q", m, n, P1, Q1) + body.tobytes()

    @classmethod
    def from_bytes(cls, buf: bytes) -> "GramTensor":
        if len(buf) < 32:
            raise ValueError("buffer too short for a Gram tensor header")
        m, n, P1, Q1 = struct.unpack("<4q", buf[:32])
        count = m * n * P1 * Q1
        if len(buf) != 32 + 8 * count:
            raise ValueError("Gram tensor buffer length does not match its header")
        arr = np.frombuffer(buf, dtype="<f8", offset=32).astype(np.float64)
        if P1 == 1 and Q1 == 1:
            return cls(arr.reshape(1, 1, m, n), full=False)
        return cls(np.ascontiguousarray(np.moveaxis(arr.reshape(m, n, P1, Q1), (2, 3), (0, 1))),
                   full=True)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "GramTensor":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def write_terminal_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "k"])
            for (i, j), v in np.ndenumerate(self.terminal):
                w.writerow([i, j, repr(float(v))])


def check_pair(X: Ensemble, Y: Ensemble) -> None:
    if not (X.augmented and Y.augmented):
        raise ValueError("Gram computations expect time-augmented ensembles")
    if X.dim != Y.dim:
        raise ValueError(f"dimension mismatch: {X.dim} vs {Y.dim}")


def gram_from_increments(dx: np.ndarray, dy: np.ndarray, full: bool, refine: int,
                         scheme: str) -> np.ndarray:
    """Solve every pair of increment sequences ``dx (m, P, d)`` and ``dy (n, Q, d)``.

    Returns ``(P+1, Q+1, m, n)`` when ``full`` else the ``(m, n)`` terminal matrix.
    """
    m, P, _ = dx.shape
    n, Q, _ = dy.shape
    out = np.empty((P + 1, Q + 1, m, n)) if full else np.empty((m, n))
    rows = max(1, _BATCH // n)
    for i0 in range(0, m, rows):
        i1 = min(m, i0 + rows)
        inc = np.einsum("ipk,jqk->pqij", dx[i0:i1], dy, optimize=True)
        if not np.all(np.isfinite(inc)):
            raise ValueError("non-finite increment inner products")
        res = solve_batch(inc.reshape(P, Q, -1), refine, scheme, full)
        if full:
            out[:, :, i0:i1] = res.reshape(P + 1, Q + 1, i1 - i0, n)
        else:
            out[i0:i1] = res.reshape(i1 - i0, n)
    return out


def first_order_gram(X: Ensemble, Y: Ensemble, full: bool = True,
                     refine: int = DEFAULT_REFINE, scheme: str = DEFAULT_SCHEME) -> GramTensor:
    """Signature kernel of every prefix pair ``(x^i|_{t_p}, y^j|_{s_q})``.

    Deterministic: each cell is an independent PDE solved in a fixed order.
    """
    check_pair(X, Y)
    refine = _check_refine(refine)
    _check_scheme(scheme)
    res = gram_from_increments(X.increments, Y.increments, full, refine, scheme)
    return GramTensor(res if full else res[None, None], full, X.grid.points, Y.grid.points)


def _tensor_exp(v: np.ndarray, level: int) -> list[np.ndarray]:
    out = [np.ones(())]
    for n in range(1, level + 1):
        out.append(np.multiply.outer(out[-1], v) / n)
    return out


def _chen(a: list[np.ndarray], b: list[np.ndarray]) -> list[np.ndarray]:
    level = len(a) - 1
    out = []
    for n in range(level + 1):
        acc = np.zeros(a[n].shape)
        for j in range(n + 1):
            acc = acc + np.multiply.outer(a[n - j], b[j])
        out.append(acc)
    return out


def truncated_signature(x: Path, level: int) -> list[np.ndarray]:
    """Levels ``0..level`` of the signature of the piecewise-linear interpolation of ``x``."""
    sig = _tensor_exp(np.zeros(x.dim), level)
    for dv in x.increments:
        sig = _chen(sig, _tensor_exp(dv, level))
    return sig


MAX_ORACLE_LEVEL = 12
MAX_ORACLE_SEGMENTS = 12
MAX_ORACLE_ENTRIES = 2_000_000


def truncated_sig_kernel(x: Path, y: Path, level: int) -> float:
    """``sum_{n <= level} <S^n(x), S^n(y)>`` from explicitly materialised signatures.

    Brute force (cost ``~ d**level`` per segment); guarded to
    ``level <= 12``, at most 12 segments and ``d**level <= 2e6``.
    """
    if int(level) != level or level < 0:
        raise ValueError(f"level must be a nonnegative integer, got {level!r}")
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    if level > MAX_ORACLE_LEVEL:
        raise ValueError(f"level {level} exceeds the oracle limit {MAX_ORACLE_LEVEL}")
    if max(len(x), len(y)) - 1 > MAX_ORACLE_SEGMENTS:
        raise ValueError(f"more than {MAX_ORACLE_SEGMENTS} segments")
    if x.dim ** level > MAX_ORACLE_ENTRIES:
        raise ValueError(f"d**level = {x.dim ** level} is too large for brute force")
    sx = truncated_signature(x, int(level))
    sy = truncated_signature(y, int(level))
    return float(sum(np.vdot(a, b) for a, b in zip(sx, sy)))

