"""Dense complex matrix helpers and the Pauli-string basis.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The Hermitian
eigensolver is a cyclic complex Jacobi method; it is slow for large inputs
but the operators handled here never exceed 64x64.
"""
import math
from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np

from .errors import DimensionError, HermiticityError, ScopeError

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI_LETTERS = "IXYZ"
_SINGLE = {"I": SIGMA_0, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}

MAX_QUBITS = 6
MAX_EIG_DIM = 64


def as_matrix(a):
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


def kron(a, b):
    return np.kron(as_matrix(a), as_matrix(b))


def commutator(a, b):
    """Return ``a @ b - b @ a``.  Stacks of matrices are accepted."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[-2:] != b.shape[-2:]:
        raise DimensionError(f"commutator of {a.shape} and {b.shape}")
    return a @ b - b @ a


def dagger(a):
    return np.conj(np.swapaxes(np.asarray(a, dtype=complex), -1, -2))


def frobenius_norm_sq(a):
    a = np.asarray(a)
    return float(np.sum(a.real**2 + a.imag**2))


def hermiticity_deviation(a):
    a = np.asarray(a, dtype=complex)
    return float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0


def is_hermitian(a, tol=1e-12):
    return hermiticity_deviation(a) <= tol


def _round_robin(n):
    """Rounds of disjoint index pairs covering every pair once (circle method)."""
    players = list(range(n)) + ([None] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[k], players[m - 1 - k]) for k in range(m // 2)]
        pairs = [tuple(sorted(pq)) for pq in pairs if None not in pq]
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


_ROUNDS = {}


def hermitian_eigensystem(a, tol=1e-10, max_sweeps=100):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once, in round-robin order, so
    the rotations of one round act on disjoint index pairs and are applied
    together.

    Parameters
    ----------
    a : array_like
        Hermitian matrix, at most 64x64.
    tol : float
        Largest accepted ``|a - a^H|`` entry.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Ascending.  Ties keep the order in which the rotations left them.
    eigenvectors : ndarray, shape (n, n)
        Unitary matrix whose columns are the eigenvectors.
    """
    a = as_matrix(a)
    n = a.shape[0]
    if n > MAX_EIG_DIM:
        raise ScopeError(f"dimension {n} exceeds {MAX_EIG_DIM}")
    if hermiticity_deviation(a) > tol:
        raise HermiticityError(f"matrix deviates from Hermitian by {hermiticity_deviation(a):.3e}")

    work = 0.5 * (a + dagger(a))
    vecs = np.eye(n, dtype=complex)
    threshold = 1e-14 * np.sqrt(frobenius_norm_sq(work))
    off_mask = ~np.eye(n, dtype=bool)
    rounds = _ROUNDS.setdefault(n, _round_robin(n))

    # batched rounds only pay off once a round holds several pairs
    sweep = _sweep_batched if n > _BATCH_MIN_DIM else _sweep_scalar
    for _ in range(max_sweeps):
        if np.sqrt(frobenius_norm_sq(work[off_mask])) <= threshold:
            break
        sweep(work, vecs, rounds)
    else:
        raise ArithmeticError("Jacobi eigensolver did not converge")

    evals = np.real(np.diag(work)).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], vecs[:, order]


_BATCH_MIN_DIM = 8


def _rotation(app, aqq, g):
    """Vectorized ``(c, s, phase)`` of the complex Jacobi rotations annihilating ``g = a[p, q]``."""
    mag = np.abs(g)
    phase = g / mag
    theta = (aqq - app) / (2.0 * mag)
    t = np.sign(theta + (theta == 0)) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    return c, t * c, phase


def _sweep_scalar(work, vecs, rounds):
    for ps, qs in rounds:
        for p, q in zip(ps.tolist(), qs.tolist()):
            g = complex(work[p, q])
            mag = abs(g)
            if mag <= 1e-300:
                continue
            phase = g / mag
            theta = (work[q, q].real - work[p, p].real) / (2.0 * mag)
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
            idx = [p, q]
            work[:, idx] = work[:, idx] @ rot
            work[idx, :] = rot.conj().T @ work[idx, :]
            work[p, q] = work[q, p] = 0.0
            work[p, p] = work[p, p].real
            work[q, q] = work[q, q].real
            vecs[:, idx] = vecs[:, idx] @ rot


def _sweep_batched(work, vecs, rounds):
    for p, q in rounds:
        g = work[p, q]
        live = np.abs(g) > 1e-300
        if not live.any():
            continue
        p, q, g = p[live], q[live], g[live]
        c, s, phase = _rotation(work[p, p].real, work[q, q].real, g)
        # 2x2 blocks [[c, s], [-s conj(phase), c conj(phase)]]: phase-align q, then rotate
        r10 = -s * np.conj(phase)
        r11 = c * np.conj(phase)
        for m in (work, vecs):
            cp, cq = m[:, p].copy(), m[:, q]
            m[:, p] = cp * c + cq * r10
            m[:, q] = cp * s + cq * r11
        rp, rq = work[p, :].copy(), work[q, :]
        work[p, :] = c[:, None] * rp + np.conj(r10)[:, None] * rq
        work[q, :] = s[:, None] * rp + np.conj(r11)[:, None] * rq
        work[p, q] = work[q, p] = 0.0
        work[p, p] = work[p, p].real
        work[q, q] = work[q, q].real


@dataclass(frozen=True)
class PauliBasis:
    """All ``4**n_qubits`` Pauli strings in lexicographic I<X<Y<Z order."""

    n_qubits: int
    strings: np.ndarray
    labels: tuple

    @property
    def dim(self):
        return 2**self.n_qubits

    def index(self, label):
        return self.labels.index(label.upper())

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, label):
        return self.strings[self.index(label)]


_BASIS_CACHE = {}


def pauli_basis(n_qubits):
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ScopeError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits!r}")
    n_qubits = int(n_qubits)
    if n_qubits not in _BASIS_CACHE:
        labels = tuple("".join(p) for p in product(PAULI_LETTERS, repeat=n_qubits))
        strings = np.stack([reduce(np.kron, (_SINGLE[ch] for ch in lab)) for lab in labels])
        strings.setflags(write=False)
        _BASIS_CACHE[n_qubits] = PauliBasis(n_qubits, strings, labels)
    return _BASIS_CACHE[n_qubits]


def pauli_decompose(m, basis):
    """Coefficients ``Tr(P @ m) / 2**n`` for every string ``P`` of ``basis``.

    ``m`` may also be a stack of matrices with shape ``(..., d, d)``.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape[-2:] != (basis.dim, basis.dim):
        raise DimensionError(f"matrix shape {m.shape[-2:]} does not match {basis.n_qubits} qubits")
    return np.einsum("pij,...ji->...p", basis.strings, m) / basis.dim


def pauli_reconstruct(coeffs, basis):
    coeffs = np.asarray(coeffs)
    if coeffs.shape[-1] != len(basis):
        raise DimensionError(f"expected {len(basis)} coefficients, got {coeffs.shape[-1]}")
    return np.einsum("...p,pij->...ij", coeffs, basis.strings)
