"""Product states and open-boundary matrix product states.

MPS tensors have shape ``(left, 2, right)`` and site ``k`` is qubit ``k``.
Gates between neighbouring sites go through the usual two-site SVD update.
Any other Pauli rotation, such as the wrap-around bond of a periodic chain,
is applied as the two-branch sum ``cos(theta) psi - i sin(theta) P psi``
followed by an SVD compression of the bonds it spans.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import GateSchedule, Hamiltonian, trotter_schedule
from .pauli import PauliOperator, PauliString, RotationGate, key_letters

__all__ = [
    "ProductState",
    "product_expectation",
    "MpsState",
    "tebd_evolve",
    "mps_expectation",
    "mps_entanglement_entropy",
    "suggest_bond_dimension",
    "save_mps",
    "load_mps",
]

# single-qubit Paulis indexed by letter code x + 2 z (I, X, Z, Y)
_SIGMA = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[1, 0], [0, -1]],
    [[0, -1j], [1j, 0]],
], dtype=complex)

_PATTERN_BLOCH = {
    "0": (0.0, 0.0, 1.0),
    "1": (0.0, 0.0, -1.0),
    "+": (1.0, 0.0, 0.0),
    "-": (-1.0, 0.0, 0.0),
    "r": (0.0, 1.0, 0.0),
    "l": (0.0, -1.0, 0.0),
}

SVD_CUTOFF = 1e-12


# ----------------------------------------------------------------------------
# product states

@dataclass(frozen=True, eq=False)
class ProductState:
    """Tensor product of single-qubit states given by Bloch vectors.

    Parameters
    ----------
    bloch : array of shape (n, 3)
        Rows ``(<X>, <Y>, <Z>)`` with norm at most one.  Rows of norm
        below one describe mixed qubits.
    """

    bloch: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bloch, dtype=float)
        if b.ndim != 2 or b.shape[1] != 3 or b.shape[0] < 1:
            raise ValueError(f"Bloch vectors must have shape (n, 3), got {b.shape}")
        if np.any(np.linalg.norm(b, axis=1) > 1 + 1e-12):
            raise ValueError("Bloch vector longer than one")
        b.setflags(write=False)
        object.__setattr__(self, "bloch", b)

    @classmethod
    def from_pattern(cls, pattern: str) -> "ProductState":
        """Build from characters ``0 1 + - r l`` (Z, X and Y eigenstates)."""
        bad = [i for i, ch in enumerate(pattern) if ch not in _PATTERN_BLOCH]
        if bad or not pattern:
            pos = bad[0] if bad else 0
            raise ValueError(f"invalid state pattern {pattern!r} at position {pos}")
        return cls(np.array([_PATTERN_BLOCH[ch] for ch in pattern]))

    @classmethod
    def neel(cls, n: int) -> "ProductState":
        """``|0101...>``."""
        return cls.from_pattern("".join("01"[k % 2] for k in range(n)))

    @property
    def n_qubits(self) -> int:
        return self.bloch.shape[0]

    @property
    def is_pure(self) -> bool:
        return bool(np.allclose(np.linalg.norm(self.bloch, axis=1), 1.0, atol=1e-10))

    def qubit_vectors(self) -> list[np.ndarray]:
        """Single-qubit kets; only defined for pure states."""
        if not self.is_pure:
            raise ValueError("mixed product states have no state vector")
        out = []
        for bx, by, bz in self.bloch:
            theta = math.acos(max(-1.0, min(1.0, bz)))
            phi = math.atan2(by, bx)
            out.append(np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)]))
        return out

    def to_dense(self):
        from .oracle import DenseState

        vec = np.ones(1, dtype=complex)
        # little-endian: qubit k is bit k, so later qubits are more significant
        for q in self.qubit_vectors():
            vec = np.kron(q, vec)
        return DenseState(vec, self.n_qubits)

    def to_mps(self) -> "MpsState":
        return MpsState([q.reshape(1, 2, 1).astype(complex) for q in self.qubit_vectors()], center=0)


def product_expectation(state: ProductState, op: PauliOperator) -> float:
    """``Tr(rho op)`` as a sum of products of Bloch components.

    ``op`` may also be a single :class:`PauliString`.
    """
    if isinstance(op, PauliString):
        op = PauliOperator.from_pauli(op)
    if op.n_qubits != state.n_qubits:
        raise ValueError(f"dimension mismatch: state on {state.n_qubits} qubits, operator on {op.n_qubits}")
    if len(op) == 0:
        return 0.0
    n = state.n_qubits
    # per-qubit values by letter code I, X, Z, Y
    table = np.column_stack([np.ones(n), state.bloch[:, 0], state.bloch[:, 2], state.bloch[:, 1]])
    total = 0.0
    chunk = max(1, (1 << 20) // n)
    keys, coefs = op.keys, op.coefficients
    for s in range(0, keys.size, chunk):
        letters = key_letters(keys[s:s + chunk], n)
        vals = table[np.arange(n)[None, :], letters].prod(axis=1)
        total += float(np.dot(vals, coefs[s:s + chunk]))
    return total


# ----------------------------------------------------------------------------
# matrix product states

@dataclass
class MpsState:
    """Open-boundary MPS with an orthogonality center.

    Sites left of ``center`` are left-orthonormal and sites right of it
    right-orthonormal; ``None`` means no canonical form is known.
    """

    tensors: list[np.ndarray]
    center: int | None = None
    truncation_log: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.tensors:
            raise ValueError("an MPS needs at least one site")
        self.tensors = [np.asarray(a, dtype=complex) for a in self.tensors]
        for k, a in enumerate(self.tensors):
            if a.ndim != 3 or a.shape[1] != 2:
                raise ValueError(f"site {k}: expected shape (l, 2, r), got {a.shape}")
            if k and self.tensors[k - 1].shape[2] != a.shape[0]:
                raise ValueError(f"bond {k - 1}-{k} dimensions disagree")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension one")

    @classmethod
    def from_product(cls, state: ProductState) -> "MpsState":
        return state.to_mps()

    @classmethod
    def from_dense(cls, state, chi: int | None = None) -> "MpsState":
        """Exact (or ``chi``-truncated) MPS of a dense state by sequential SVDs."""
        vec = state.amplitudes if hasattr(state, "amplitudes") else np.asarray(state, dtype=complex)
        n = int(round(math.log2(vec.size)))
        # reorder to big-endian in site order: axis k is qubit k
        psi = vec.reshape((2,) * n).transpose(tuple(range(n - 1, -1, -1)))
        tensors = []
        rest = psi.reshape(1, -1)
        for k in range(n - 1):
            left = rest.shape[0]
            u, s, vh = np.linalg.svd(rest.reshape(left * 2, -1), full_matrices=False)
            keep = max(1, int(np.sum(s > SVD_CUTOFF)))
            if chi is not None:
                keep = min(keep, chi)
            tensors.append(u[:, :keep].reshape(left, 2, keep))
            rest = s[:keep, None] * vh[:keep]
        tensors.append(rest.reshape(rest.shape[0], 2, 1))
        mps = cls(tensors, center=n - 1)
        mps.normalize()
        return mps

    @property
    def n_qubits(self) -> int:
        return len(self.tensors)

    @property
    def bond_dimensions(self) -> list[int]:
        return [a.shape[2] for a in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dimensions, default=1)

    def copy(self) -> "MpsState":
        return MpsState([a.copy() for a in self.tensors], self.center, list(self.truncation_log))

    # -- canonical form --------------------------------------------------------
    def canonicalize(self, site: int = 0) -> "MpsState":
        """Move (or establish) the orthogonality center at ``site``, in place."""
        if self.center is None:
            self.center = self.n_qubits - 1
            for k in range(self.n_qubits - 1, 0, -1):
                self._shift_left(k)
            self.center = 0
        while self.center < site:
            self._shift_right(self.center)
            self.center += 1
        while self.center > site:
            self._shift_left(self.center)
            self.center -= 1
        return self

    def _shift_right(self, k: int):
        a = self.tensors[k]
        l, _, r = a.shape
        q, rr = np.linalg.qr(a.reshape(l * 2, r))
        self.tensors[k] = q.reshape(l, 2, q.shape[1])
        self.tensors[k + 1] = np.tensordot(rr, self.tensors[k + 1], axes=(1, 0))

    def _shift_left(self, k: int):
        a = self.tensors[k]
        l, _, r = a.shape
        q, rr = np.linalg.qr(a.reshape(l, 2 * r).T)
        self.tensors[k] = q.T.reshape(q.shape[1], 2, r)
        self.tensors[k - 1] = np.tensordot(self.tensors[k - 1], rr.T, axes=(2, 0))

    def norm(self) -> float:
        env = np.ones((1, 1), dtype=complex)
        for a in self.tensors:
            env = np.einsum("ab,asc,bsd->cd", env, a.conj(), a)
        return float(math.sqrt(abs(env[0, 0])))

    def normalize(self) -> "MpsState":
        nrm = self.norm()
        site = self.center if self.center is not None else 0
        self.tensors[site] = self.tensors[site] / nrm
        return self

    def to_dense(self):
        from .oracle import DenseState

        psi = self.tensors[0]
        for a in self.tensors[1:]:
            psi = np.tensordot(psi, a, axes=(psi.ndim - 1, 0))
        psi = psi.reshape((2,) * self.n_qubits)
        # axis k is qubit k; little-endian index wants qubit n-1 first
        vec = psi.transpose(tuple(range(self.n_qubits - 1, -1, -1))).reshape(-1)
        return DenseState(vec / np.linalg.norm(vec), self.n_qubits)

    def bond_singular_values(self, bond: int) -> np.ndarray:
        """Schmidt values across the cut between sites ``bond`` and ``bond + 1``."""
        if not 0 <= bond < self.n_qubits - 1:
            raise ValueError(f"bond {bond} out of range")
        self.canonicalize(bond)
        a = self.tensors[bond]
        s = np.linalg.svd(a.reshape(a.shape[0] * 2, a.shape[2]), compute_uv=False)
        return s / np.linalg.norm(s)

    # -- gates -----------------------------------------------------------------
    def apply_gate(self, gate: RotationGate, chi: int | None = None) -> float:
        """Apply ``exp(-i theta G)`` in place; returns the discarded weight."""
        g = gate.generator
        if g.n_qubits != self.n_qubits:
            raise ValueError("gate and state act on different numbers of qubits")
        support = g.support
        th = gate.angle
        c, s = math.cos(th), math.sin(th)
        letters = [g.letter(q) for q in support]
        codes = ["IXZY".index(ch) for ch in letters]
        if len(support) == 1:
            q = support[0]
            u = c * np.eye(2) - 1j * s * _SIGMA[codes[0]]
            self.tensors[q] = np.einsum("xs,asb->axb", u, self.tensors[q])
            return 0.0
        if len(support) == 2 and support[1] == support[0] + 1:
            u = c * np.eye(4) - 1j * s * np.kron(_SIGMA[codes[0]], _SIGMA[codes[1]])
            return self._two_site(support[0], u.reshape(2, 2, 2, 2), chi)
        return self._pauli_branch(support, codes, c, s, chi)

    def _two_site(self, i: int, u: np.ndarray, chi: int | None) -> float:
        self.canonicalize(i)
        a, b = self.tensors[i], self.tensors[i + 1]
        theta = np.einsum("asb,btc->astc", a, b)
        theta = np.einsum("xyst,astc->axyc", u, theta)
        l, r = a.shape[0], b.shape[2]
        uu, sv, vh = np.linalg.svd(theta.reshape(l * 2, 2 * r), full_matrices=False)
        keep, lost = _keep_count(sv, chi)
        sk = sv[:keep] / np.linalg.norm(sv[:keep])
        self.tensors[i] = uu[:, :keep].reshape(l, 2, keep)
        self.tensors[i + 1] = (sk[:, None] * vh[:keep]).reshape(keep, 2, r)
        self.center = i + 1
        return lost

    def _pauli_branch(self, support, codes, c, s, chi) -> float:
        lo, hi = support[0], support[-1]
        self.canonicalize(lo)
        letter = dict(zip(support, codes))

        def sig(k, a):
            return np.einsum("xs,asb->axb", _SIGMA[letter.get(k, 0)], a)

        for k in range(lo, hi + 1):
            a = self.tensors[k]
            pa = sig(k, a)
            l, _, r = a.shape
            if k == lo:
                new = np.concatenate([c * a, -1j * s * pa], axis=2)
            elif k == hi:
                new = np.concatenate([a, pa], axis=0)
            else:
                new = np.zeros((2 * l, 2, 2 * r), dtype=complex)
                new[:l, :, :r] = a
                new[l:, :, r:] = pa
            self.tensors[k] = new
        # left sweep to orthonormalize, then compress right to left
        for k in range(lo, hi):
            self._shift_right(k)
        lost = 0.0
        for k in range(hi, lo, -1):
            a = self.tensors[k]
            l, _, r = a.shape
            uu, sv, vh = np.linalg.svd(a.reshape(l, 2 * r), full_matrices=False)
            keep, dropped = _keep_count(sv, chi)
            lost += dropped
            self.tensors[k] = vh[:keep].reshape(keep, 2, r)
            self.tensors[k - 1] = np.tensordot(self.tensors[k - 1], uu[:, :keep] * sv[:keep], axes=(2, 0))
        self.center = lo
        a = self.tensors[lo]
        self.tensors[lo] = a / np.linalg.norm(a)
        return lost

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "bond_dimensions": self.bond_dimensions,
                "center": self.center, "truncation_log": self.truncation_log}


def _keep_count(sv: np.ndarray, chi: int | None) -> tuple[int, float]:
    total = float(np.sum(sv ** 2))
    keep = max(1, int(np.sum(sv > SVD_CUTOFF * max(sv[0], 1.0))))
    if chi is not None:
        keep = min(keep, chi)
    lost = float(np.sum(sv[keep:] ** 2)) / total if total > 0 else 0.0
    return keep, lost


def suggest_bond_dimension(w_star: int, cap: int = 1024) -> int:
    """Bond dimension ``2^{w*}``: enough to carry weight-``w*`` correlations."""
    return int(min(cap, 2 ** max(0, int(w_star))))


def tebd_evolve(state: MpsState | ProductState, h: Hamiltonian | None, t: float, r: int,
                p: int = 2, chi: int | None = None, *, schedule: GateSchedule | None = None,
                callback=None) -> MpsState:
    """Product-formula evolution of an MPS, truncating every bond to ``chi``.

    The Hamiltonian may hold single-site terms, nearest-neighbour two-site
    terms and the wrap-around bond ``(0, n-1)`` of a periodic chain.

    The discarded weight of every step is appended to
    ``truncation_log``.  ``callback(d, state)`` runs after each step.
    """
    mps = state.to_mps() if isinstance(state, ProductState) else state.copy()
    if schedule is None:
        if not h.is_nearest_neighbor(periodic_ok=True):
            raise ValueError("MPS backend needs 1-site and nearest-neighbour 2-site terms (periodic wrap allowed)")
        schedule = trotter_schedule(h, p, t, r)
    if schedule.n_qubits != mps.n_qubits:
        raise ValueError("schedule and state act on different numbers of qubits")
    for d in range(1, schedule.n_steps + 1):
        lost = 0.0
        for gate in schedule.step_gates:
            lost += mps.apply_gate(gate, chi)
        mps.truncation_log.append(lost)
        if callback is not None:
            callback(d, mps)
    return mps


def mps_expectation(state: MpsState, op: PauliOperator, chunk: int = 4096) -> float:
    """``<psi| op |psi>`` with transfer matrices shared by common prefixes.

    Terms are sorted by their letter strings so that each chunk shares
    left environments between strings with a common prefix.
    """
    n = state.n_qubits
    if op.n_qubits != n:
        raise ValueError(f"dimension mismatch: state on {n} qubits, operator on {op.n_qubits}")
    if len(op) == 0:
        return 0.0
    letters = key_letters(op.keys, n).astype(np.int64)
    order = np.lexsort(letters.T[::-1])
    letters = letters[order]
    coefs = op.coefficients[order]
    # sigma_l applied to each site tensor, and the conjugate site tensors
    dressed = [np.einsum("lxs,asb->laxb", _SIGMA, a) for a in state.tensors]
    conj = [a.conj() for a in state.tensors]
    norm_sq = state.norm() ** 2
    total = 0j
    for s0 in range(0, len(coefs), chunk):
        lt = letters[s0:s0 + chunk]
        env = np.ones((1, 1, 1), dtype=complex)
        group = np.zeros(lt.shape[0], dtype=np.int64)
        for k in range(n):
            key = group * 4 + lt[:, k]
            uniq, inv = np.unique(key, return_inverse=True)
            parent, code = uniq // 4, uniq % 4
            ma = dressed[k][code]  # (G, a, 2, d)
            g_, a_, _, d_ = ma.shape
            t1 = np.matmul(env[parent], ma.reshape(g_, a_, 2 * d_))  # (G, a', 2d)
            ca = conj[k]
            t1 = t1.reshape(g_, ca.shape[0] * 2, d_)
            env = np.matmul(ca.reshape(-1, ca.shape[2]).T[None], t1)
            group = inv.ravel()
        total += np.dot(env[group, 0, 0], coefs[s0:s0 + chunk])
    val = total / norm_sq
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"expectation has imaginary part {val.imag}")
    return float(val.real)


def mps_entanglement_entropy(state: MpsState, region=None) -> float:
    """Von Neumann entropy in bits of a contiguous region.

    ``region`` is a ``(start, stop)`` tuple, a ``range`` or a list/set of
    sites; the default is the left half.  For a region touching an edge this
    comes straight from the Schmidt values.  Interior regions go through the
    reduced density matrix and are limited to 12 sites.
    """
    n = state.n_qubits
    if region is None:
        region = (0, n // 2)
    if isinstance(region, (range, list, set, frozenset)):
        sites = sorted(int(q) for q in region)
        if not sites or sites != list(range(sites[0], sites[-1] + 1)):
            raise ValueError(f"region {sorted(region)} is not a contiguous run of sites")
        region = (sites[0], sites[-1] + 1)
    start, stop = int(region[0]), int(region[1])
    if not 0 <= start < stop <= n:
        raise ValueError(f"invalid region {region} for {n} sites")
    if stop - start == n:
        return 0.0
    if start == 0 or stop == n:
        bond = stop - 1 if start == 0 else start - 1
        s = state.bond_singular_values(bond)
        p = s[s > 1e-15] ** 2
        return float(max(0.0, -np.sum(p * np.log2(p))))
    if stop - start > 12:
        raise ValueError("interior regions are limited to 12 sites")
    state.canonicalize(start)
    block = state.tensors[start]
    for a in state.tensors[start + 1:stop]:
        block = np.tensordot(block, a, axes=(block.ndim - 1, 0))
    m = block.reshape(block.shape[0], -1, block.shape[-1]).transpose(1, 0, 2).reshape(1 << (stop - start), -1)
    # sites right of stop are right-orthonormal, so m m^dag is the reduced state
    rho = m @ m.conj().T
    lam = np.clip(np.linalg.eigvalsh(rho / np.trace(rho).real), 0.0, None)
    lam = lam[lam > 1e-15]
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def save_mps(state: MpsState, path) -> None:
    """Write tensors and a JSON header to an ``.npz`` archive."""
    arrays = {f"site_{k}": a for k, a in enumerate(state.tensors)}
    header = json.dumps(state.to_dict())
    np.savez(path, header=np.array(header), **arrays)


def load_mps(path) -> MpsState:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        tensors = [data[f"site_{k}"] for k in range(header["n_qubits"])]
    return MpsState(tensors, header.get("center"), list(header.get("truncation_log", [])))
