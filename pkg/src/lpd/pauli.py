"""Pauli strings as X/Z bit masks and sparse real Pauli operators.

Qubit ``k`` is bit ``k`` of both masks and the ``k``-th character of the
text label, so ``"ZIII"`` has ``z_mask == 0b0001``.  A qubit carries
I/X/Y/Z for ``(x, z)`` equal to ``(0,0)/(1,0)/(1,1)/(0,1)`` and a string
with masks ``(x, z)`` is the operator ``i^{|x & z|} X^x Z^z``.

:class:`PauliOperator` stores its terms as two flat numpy arrays: packed
``uint64`` keys ``(x << 32) | z`` kept sorted, and ``float64``
coefficients.  This limits sparse operators to 32 qubits, which is far
beyond what the weight-truncated dynamics can touch anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

__all__ = [
    "MAX_OPERATOR_QUBITS",
    "PauliParseError",
    "PauliString",
    "PauliOperator",
    "RotationGate",
    "pauli_from_text",
    "pauli_to_text",
    "weight",
    "commutes",
    "multiply",
    "rotate_term",
    "pauli_two_norm",
    "truncate_by_weight",
    "operator_magic",
    "commutator",
    "parse_operator_text",
    "read_operator",
    "write_operator",
]

MAX_OPERATOR_QUBITS = 32

_LETTERS = "IXZY"  # indexed by x + 2 z
_CODES = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PHASES = (1, 1j, -1, -1j)
_LOW32 = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)


class PauliParseError(ValueError):
    """Raised for malformed Pauli labels or operator files."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    """An ``n``-qubit Pauli word without phase."""

    n_qubits: int
    x_mask: int
    z_mask: int

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be non-negative")
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError(f"masks do not fit in {self.n_qubits} qubits")

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0)

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "PauliString":
        return pauli_from_text(text, n_qubits)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliString":
        """The string acting with ``letter`` on ``qubit`` only."""
        if not 0 <= qubit < n_qubits:
            raise ValueError(f"qubit {qubit} out of range for {n_qubits} qubits")
        x, z = _CODES[letter.upper()]
        return cls(n_qubits, x << qubit, z << qubit)

    @classmethod
    def from_sparse(cls, n_qubits: int, ops: Mapping[int, str]) -> "PauliString":
        """Build from ``{qubit: letter}``, e.g. ``{0: "X", 1: "X"}``."""
        x = z = 0
        for q, letter in ops.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range for {n_qubits} qubits")
            bx, bz = _CODES[letter.upper()]
            x |= bx << q
            z |= bz << q
        return cls(n_qubits, x, z)

    @property
    def weight(self) -> int:
        return _popcount(self.x_mask | self.z_mask)

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x_mask | self.z_mask
        return tuple(q for q in range(self.n_qubits) if (m >> q) & 1)

    @property
    def key(self) -> int:
        return (self.x_mask << 32) | self.z_mask

    def letter(self, qubit: int) -> str:
        return _LETTERS[((self.x_mask >> qubit) & 1) + 2 * ((self.z_mask >> qubit) & 1)]

    def to_text(self) -> str:
        return pauli_to_text(self)

    def commutes(self, other: "PauliString") -> bool:
        return commutes(self, other)

    def __mul__(self, other: "PauliString"):
        return multiply(self, other)

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"PauliString({self.to_text()!r})"


def pauli_from_text(text: str, n: int | None = None) -> PauliString:
    """Parse an I/X/Y/Z label; character ``k`` is qubit ``k``.

    >>> pauli_from_text("XZIIIIIXIIII").weight
    3
    """
    text = text.strip()
    if n is None:
        n = len(text)
    if len(text) != n:
        raise PauliParseError(
            f"label {text!r} has length {len(text)}, expected {n}",
            position=min(len(text), n),
        )
    x = z = 0
    for k, ch in enumerate(text):
        try:
            bx, bz = _CODES[ch.upper()]
        except KeyError:
            raise PauliParseError(
                f"invalid Pauli character {ch!r} at position {k} in {text!r}", position=k
            ) from None
        x |= bx << k
        z |= bz << k
    return PauliString(n, x, z)


def pauli_to_text(p: PauliString) -> str:
    return "".join(p.letter(q) for q in range(p.n_qubits))


def weight(p: PauliString) -> int:
    return p.weight


def _check_same_n(p: PauliString, q: PauliString):
    if p.n_qubits != q.n_qubits:
        raise ValueError(f"dimension mismatch: {p.n_qubits} vs {q.n_qubits} qubits")


def commutes(p: PauliString, q: PauliString) -> bool:
    """True iff the symplectic product of ``p`` and ``q`` vanishes."""
    _check_same_n(p, q)
    return _popcount((p.x_mask & q.z_mask) ^ (p.z_mask & q.x_mask)) % 2 == 0


def _phase_exponent(gx, gz, px, pz, rx, rz):
    # P_(x,z) = i^{|x&z|} X^x Z^z  and  Z^a X^b = (-1)^{|a&b|} X^b Z^a
    return (_popcount(gx & gz) + _popcount(px & pz) - _popcount(rx & rz)
            + 2 * _popcount(gz & px)) % 4


def multiply(p: PauliString, q: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, r)`` with ``p @ q == phase * r``.

    >>> multiply(pauli_from_text("X"), pauli_from_text("Z"))
    ((-0-1j), PauliString('Y'))
    """
    _check_same_n(p, q)
    rx, rz = p.x_mask ^ q.x_mask, p.z_mask ^ q.z_mask
    k = _phase_exponent(p.x_mask, p.z_mask, q.x_mask, q.z_mask, rx, rz)
    return complex(_PHASES[k]), PauliString(p.n_qubits, rx, rz)


@dataclass(frozen=True)
class RotationGate:
    """The unitary ``exp(-1j * angle * generator)``.

    Conjugating a Pauli that anticommutes with the generator rotates it by
    ``effective_angle = 2 * angle``:
    ``U^dag P U = cos(2 angle) P + i sin(2 angle) G P``.
    """

    generator: PauliString
    angle: float

    def __post_init__(self):
        if self.generator.weight < 1:
            raise ValueError("rotation generator must be a non-identity Pauli string")
        if not math.isfinite(self.angle):
            raise ValueError(f"rotation angle must be finite, got {self.angle}")

    @property
    def n_qubits(self) -> int:
        return self.generator.n_qubits

    @property
    def effective_angle(self) -> float:
        return 2.0 * self.angle

    def inverse(self) -> "RotationGate":
        return RotationGate(self.generator, -self.angle)


def rotate_term(gate: RotationGate, p: PauliString, c: float) -> list[tuple[PauliString, float]]:
    """Heisenberg conjugation of the single term ``c * p`` by ``gate``.

    Returns one term when ``p`` commutes with the generator and two
    otherwise; the squared coefficients always sum to ``c**2``.
    """
    g = gate.generator
    _check_same_n(g, p)
    if commutes(g, p):
        return [(p, c)]
    theta = gate.effective_angle
    phase, r = multiply(g, p)
    sign = (1j * phase).real
    if abs((1j * phase).imag) > 0:
        raise ArithmeticError("anticommuting Pauli product produced a non-imaginary phase")
    return [(p, c * math.cos(theta)), (r, sign * c * math.sin(theta))]


# ----------------------------------------------------------------------------
# vectorised mask helpers

def split_keys(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return keys >> _SHIFT, keys & _LOW32


def pack_keys(xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    return (xs.astype(np.uint64) << _SHIFT) | zs.astype(np.uint64)


def key_weights(keys: np.ndarray) -> np.ndarray:
    xs, zs = split_keys(keys)
    return np.bitwise_count(xs | zs).astype(np.int64)


def key_letters(keys: np.ndarray, n_qubits: int) -> np.ndarray:
    """Per-qubit letter codes ``x + 2 z`` (I=0, X=1, Z=2, Y=3), shape ``(T, n)``."""
    xs, zs = split_keys(keys)
    shifts = np.arange(n_qubits, dtype=np.uint64)
    xb = (xs[:, None] >> shifts) & np.uint64(1)
    zb = (zs[:, None] >> shifts) & np.uint64(1)
    return (xb + 2 * zb).astype(np.int8)


def _weight_selector(weights: np.ndarray, weight_filter) -> np.ndarray:
    if weight_filter is None:
        return np.ones(weights.shape, dtype=bool)
    if isinstance(weight_filter, (int, np.integer)):
        return weights == int(weight_filter)
    if isinstance(weight_filter, range):
        if weight_filter.step != 1:
            return np.isin(weights, list(weight_filter))
        return (weights >= weight_filter.start) & (weights < weight_filter.stop)
    lo, hi = weight_filter
    lo = -1 if lo is None else lo
    hi = np.iinfo(np.int64).max if hi is None else hi
    return (weights >= lo) & (weights <= hi)


class PauliOperator:
    """Sparse real linear combination of Pauli strings.

    Parameters
    ----------
    n_qubits : int
    terms : mapping or iterable, optional
        ``{PauliString | label: coefficient}`` or ``(coefficient, pauli)``
        pairs.  Repeated strings are summed and zero coefficients dropped.
    """

    __slots__ = ("n_qubits", "_keys", "_coefs")

    def __init__(self, n_qubits: int, terms=None):
        if not 0 <= n_qubits <= MAX_OPERATOR_QUBITS:
            raise ValueError(
                f"sparse operators support 0..{MAX_OPERATOR_QUBITS} qubits, got {n_qubits}"
            )
        self.n_qubits = int(n_qubits)
        keys, coefs = [], []
        if terms is not None:
            items = terms.items() if isinstance(terms, Mapping) else terms
            for a, b in items:
                if isinstance(a, (PauliString, str)):
                    p, c = a, b
                else:
                    c, p = a, b
                if isinstance(p, str):
                    p = pauli_from_text(p, n_qubits)
                if p.n_qubits != n_qubits:
                    raise ValueError(f"term {p} has {p.n_qubits} qubits, expected {n_qubits}")
                c = float(c)
                if not math.isfinite(c):
                    raise ValueError(f"non-finite coefficient for {p}")
                keys.append(p.key)
                coefs.append(c)
        k = np.asarray(keys, dtype=np.uint64)
        v = np.asarray(coefs, dtype=np.float64)
        self._keys, self._coefs = _combine(k, v)

    @classmethod
    def _from_sorted(cls, n_qubits, keys, coefs) -> "PauliOperator":
        op = cls.__new__(cls)
        op.n_qubits = n_qubits
        op._keys = keys
        op._coefs = coefs
        return op

    @classmethod
    def from_arrays(cls, n_qubits, keys, coefs) -> "PauliOperator":
        k, v = _combine(np.asarray(keys, dtype=np.uint64), np.asarray(coefs, dtype=np.float64))
        return cls._from_sorted(n_qubits, k, v)

    @classmethod
    def from_pauli(cls, p: PauliString, coefficient: float = 1.0) -> "PauliOperator":
        return cls(p.n_qubits, [(coefficient, p)])

    @classmethod
    def from_label(cls, label: str, coefficient: float = 1.0) -> "PauliOperator":
        return cls.from_pauli(pauli_from_text(label), coefficient)

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliOperator":
        return cls(n_qubits)

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "PauliOperator":
        return parse_operator_text(text, n_qubits)

    # -- views ---------------------------------------------------------------
    @property
    def keys(self) -> np.ndarray:
        return self._keys

    @property
    def coefficients(self) -> np.ndarray:
        return self._coefs

    @property
    def terms(self) -> dict[PauliString, float]:
        return {p: c for p, c in self.items()}

    def items(self) -> Iterator[tuple[PauliString, float]]:
        """Terms sorted by ``(weight, x_mask, z_mask)``."""
        xs, zs = split_keys(self._keys)
        w = np.bitwise_count(xs | zs)
        order = np.lexsort((zs, xs, w))
        for i in order:
            yield PauliString(self.n_qubits, int(xs[i]), int(zs[i])), float(self._coefs[i])

    def weights(self) -> np.ndarray:
        return key_weights(self._keys)

    def __len__(self) -> int:
        return len(self._keys)

    def __iter__(self):
        return self.items()

    def __contains__(self, p: PauliString) -> bool:
        return self.coefficient(p) != 0.0

    def coefficient(self, p: PauliString | str) -> float:
        if isinstance(p, str):
            p = pauli_from_text(p, self.n_qubits)
        i = np.searchsorted(self._keys, np.uint64(p.key))
        if i < len(self._keys) and self._keys[i] == p.key:
            return float(self._coefs[i])
        return 0.0

    @property
    def max_weight(self) -> int:
        return int(self.weights().max()) if len(self) else 0

    def copy(self) -> "PauliOperator":
        return PauliOperator._from_sorted(self.n_qubits, self._keys.copy(), self._coefs.copy())

    # -- arithmetic ------------------------------------------------------------
    def _check(self, other: "PauliOperator"):
        if other.n_qubits != self.n_qubits:
            raise ValueError(f"dimension mismatch: {self.n_qubits} vs {other.n_qubits} qubits")

    def __add__(self, other: "PauliOperator") -> "PauliOperator":
        self._check(other)
        return PauliOperator.from_arrays(
            self.n_qubits,
            np.concatenate([self._keys, other._keys]),
            np.concatenate([self._coefs, other._coefs]),
        )

    def __neg__(self) -> "PauliOperator":
        return PauliOperator._from_sorted(self.n_qubits, self._keys.copy(), -self._coefs)

    def __sub__(self, other: "PauliOperator") -> "PauliOperator":
        return self + (-other)

    def __mul__(self, scalar: float) -> "PauliOperator":
        scalar = float(scalar)
        if scalar == 0.0:
            return PauliOperator.zero(self.n_qubits)
        return PauliOperator._from_sorted(self.n_qubits, self._keys.copy(), self._coefs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "PauliOperator":
        return self * (1.0 / float(scalar))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return (self.n_qubits == other.n_qubits
                and np.array_equal(self._keys, other._keys)
                and np.array_equal(self._coefs, other._coefs))

    def allclose(self, other: "PauliOperator", atol: float = 1e-12) -> bool:
        diff = self - other
        return bool(np.all(np.abs(diff._coefs) <= atol))

    # -- norms and truncation ------------------------------------------------
    def two_norm(self, weight_filter=None) -> float:
        return pauli_two_norm(self, weight_filter)

    def one_norm(self) -> float:
        """Coefficient 1-norm, an upper bound on the operator norm."""
        return float(np.abs(self._coefs).sum())

    def weight_histogram(self) -> dict[int, float]:
        """Squared Pauli 2-norm per exact weight, only non-empty weights."""
        if not len(self):
            return {}
        w = self.weights()
        sq = np.bincount(w, weights=self._coefs ** 2)
        return {int(k): float(v) for k, v in enumerate(sq) if v > 0.0}

    def filter_weight(self, weight_filter) -> "PauliOperator":
        sel = _weight_selector(self.weights(), weight_filter)
        return PauliOperator._from_sorted(self.n_qubits, self._keys[sel], self._coefs[sel])

    def truncate(self, w_star: int) -> tuple["PauliOperator", float]:
        return truncate_by_weight(self, w_star)

    def prune(self, threshold: float) -> tuple["PauliOperator", float]:
        """Drop terms with ``|c| < threshold``; returns the dropped 2-norm."""
        small = np.abs(self._coefs) < threshold
        if not small.any():
            return self, 0.0
        lost = float(np.sqrt(np.sum(self._coefs[small] ** 2)))
        keep = ~small
        return PauliOperator._from_sorted(self.n_qubits, self._keys[keep], self._coefs[keep]), lost

    def magic(self) -> float:
        return operator_magic(self)

    # -- text ------------------------------------------------------------------
    def to_text(self, header: str | None = None) -> str:
        lines = []
        if header:
            lines.extend(f"# {h}" for h in header.splitlines())
        for p, c in self.items():
            lines.append(f"{c:.17g} {p.to_text()}")
        return "\n".join(lines) + "\n"

    def __repr__(self) -> str:
        shown = []
        for i, (p, c) in enumerate(self.items()):
            if i == 6:
                shown.append("...")
                break
            shown.append(f"{c:+.6g}*{p.to_text()}")
        return f"PauliOperator(n_qubits={self.n_qubits}, terms={len(self)}: {' '.join(shown)})"


def _combine(keys: np.ndarray, coefs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort by key, sum duplicates and drop exact zeros."""
    if keys.size == 0:
        return np.zeros(0, dtype=np.uint64), np.zeros(0, dtype=np.float64)
    uniq, inv = np.unique(keys, return_inverse=True)
    summed = np.zeros(uniq.shape, dtype=np.float64)
    np.add.at(summed, inv, coefs)
    nz = summed != 0.0
    return uniq[nz], summed[nz]


def pauli_two_norm(op: PauliOperator, weight_filter=None) -> float:
    """Root of the summed squared coefficients, optionally over some weights.

    ``weight_filter`` may be an exact weight, a ``range`` or an inclusive
    ``(lo, hi)`` pair with ``None`` for an open end.
    """
    if weight_filter is None:
        c = op.coefficients
    else:
        c = op.coefficients[_weight_selector(op.weights(), weight_filter)]
    return float(np.sqrt(np.dot(c, c)))


def truncate_by_weight(op: PauliOperator, w_star: int) -> tuple[PauliOperator, float]:
    """Keep the terms of weight ``<= w_star``; no renormalisation.

    Returns the kept operator and the 2-norm of what was dropped.
    """
    if w_star < 0:
        raise ValueError("w_star must be non-negative")
    keep = op.weights() <= w_star
    if keep.all():
        return op, 0.0
    dropped = op.coefficients[~keep]
    kept = PauliOperator._from_sorted(op.n_qubits, op.keys[keep], op.coefficients[keep])
    return kept, float(np.sqrt(np.dot(dropped, dropped)))


def operator_magic(op: PauliOperator) -> float:
    """Shannon entropy in bits of the normalised squared coefficients."""
    sq = op.coefficients ** 2
    total = sq.sum()
    if total == 0.0:
        raise ValueError("operator magic is undefined for the zero operator")
    p = sq / total
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def commutator(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """Hermitian ``c`` with ``[a, b] == 1j * c``.

    The commutator of two Hermitian operators is anti-Hermitian, so the
    factor ``1j`` is split off to keep real coefficients.  Norms are
    unaffected by it.
    """
    a._check(b)
    if not len(a) or not len(b):
        return PauliOperator.zero(a.n_qubits)
    ax, az = (v[:, None] for v in split_keys(a.keys))
    bx, bz = (v[None, :] for v in split_keys(b.keys))
    anti = (np.bitwise_count((ax & bz) ^ (az & bx)) & 1).astype(bool)
    rx, rz = ax ^ bx, az ^ bz
    k = (np.bitwise_count(ax & az).astype(np.int64) + np.bitwise_count(bx & bz)
         - np.bitwise_count(rx & rz) + 2 * np.bitwise_count(az & bx).astype(np.int64)) % 4
    # [P, Q] = 2 P Q = 2 i^k R for anticommuting pairs, k odd
    sign = np.where(k == 1, 2.0, -2.0)
    coefs = (a.coefficients[:, None] * b.coefficients[None, :] * sign)[anti]
    return PauliOperator.from_arrays(a.n_qubits, pack_keys(rx[anti], rz[anti]), coefs)


def parse_terms_text(text: str, n_qubits: int | None = None) -> tuple[int, list[tuple[float, PauliString]]]:
    """Parse ``<coefficient> <IXYZ-label>`` lines in file order.

    ``#`` starts a comment; blank lines are skipped.  Returns the qubit
    count (taken from the first label when not given) and the terms.
    """
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PauliParseError(f"line {lineno}: expected '<coefficient> <label>', got {raw!r}")
        try:
            c = float(parts[0])
        except ValueError:
            raise PauliParseError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
        if n_qubits is None:
            n_qubits = len(parts[1])
        try:
            p = pauli_from_text(parts[1], n_qubits)
        except PauliParseError as exc:
            raise PauliParseError(f"line {lineno}: {exc}", exc.position) from None
        terms.append((c, p))
    if n_qubits is None:
        raise PauliParseError("empty operator text and no qubit count given")
    return n_qubits, terms


def parse_operator_text(text: str, n_qubits: int | None = None) -> PauliOperator:
    n_qubits, terms = parse_terms_text(text, n_qubits)
    return PauliOperator(n_qubits, terms)


def read_operator(path, n_qubits: int | None = None) -> PauliOperator:
    with open(path) as fh:
        return parse_operator_text(fh.read(), n_qubits)


def write_operator(op: PauliOperator, path, header: str | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(op.to_text(header))
