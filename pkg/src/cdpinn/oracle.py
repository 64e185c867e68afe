"""Reference gauge potentials and diagnostics for trained protocols.

``exact_gauge_potential`` diagonalizes the interpolated Hamiltonian and builds
the adiabatic gauge potential from its eigenbasis.  ``nc_gauge_potential`` is
the nested-commutator approximation with coefficients chosen by minimizing
the action.  The remaining functions evaluate trained networks: energy levels
along the protocol and the fidelity of the state it actually prepares.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError, IllConditionedError, ScopeError, StepSizeError
from .linalg import dagger, frobenius_norm_sq, hermitian_eigensystem, pauli_basis, pauli_reconstruct
from .net import forward_with_input_derivative
from .physics import build_h_ad, euler_lagrange_residual
from .problem import d_h_ad_d_lambda

DEFAULT_GAP_TOLERANCE = 1e-8
MAX_NC_ORDER = 4
MAX_STEP_DRIFT = 1e-6


def _comm(a, b):
    return a @ b - b @ a


def action_value(p, lam, a):
    """``Tr[G^2]`` with ``G = dH/dlam + i [a, H]`` at schedule value ``lam``."""
    h = build_h_ad(p, lam)
    g = d_h_ad_d_lambda(p) + 1j * _comm(np.asarray(a, dtype=complex), h)
    return float(np.trace(g @ g).real)


def el_residual(p, lam, a):
    """Frobenius norm of the Euler-Lagrange commutator for candidate ``a``."""
    return math.sqrt(frobenius_norm_sq(euler_lagrange_residual(p, lam, np.asarray(a, dtype=complex))))


@dataclass(frozen=True, eq=False)
class GaugeReport:
    lam: float
    a_exact: np.ndarray
    min_coupled_gap: float
    el_residual: float
    action_value: float
    energies: np.ndarray
    eigenvectors: np.ndarray

    def offdiag_in_eigenbasis(self, a):
        """Off-diagonal block of ``a`` expressed in this report's eigenbasis."""
        v = self.eigenvectors
        m = dagger(v) @ np.asarray(a, dtype=complex) @ v
        np.fill_diagonal(m, 0.0)
        return m


def exact_gauge_potential(p, lam, gap_tolerance=DEFAULT_GAP_TOLERANCE):
    """Exact adiabatic gauge potential with its diagonal (in the eigenbasis) set to zero.

    Raises
    ------
    DegenerateSpectrumError
        If two levels closer than ``gap_tolerance`` are coupled by ``dH/dlam``
        with a matrix element larger than ``gap_tolerance``.
    """
    h = build_h_ad(p, lam)
    energies, vecs = hermitian_eigensystem(h)
    dh = dagger(vecs) @ d_h_ad_d_lambda(p) @ vecs
    gaps = energies[:, None] - energies[None, :]
    off = ~np.eye(len(energies), dtype=bool)
    coupled = off & (np.abs(dh) > gap_tolerance)
    close = np.abs(gaps) < gap_tolerance
    hit = np.argwhere(coupled & close)
    if hit.size:
        m, n = map(int, hit[0])
        raise DegenerateSpectrumError(m, n, float(abs(gaps[m, n])))
    safe = np.where(off & ~close, gaps, 1.0)
    a_eig = np.where(off & ~close, -1j * dh / safe, 0.0)
    a = vecs @ a_eig @ dagger(vecs)
    a = 0.5 * (a + dagger(a))
    min_gap = float(np.min(np.abs(gaps[coupled]))) if coupled.any() else math.inf
    return GaugeReport(float(lam), a, min_gap, el_residual(p, lam, a), action_value(p, lam, a), energies, vecs)


@dataclass(frozen=True, eq=False)
class NcExpansion:
    order: int
    alphas: np.ndarray
    a_nc: np.ndarray
    condition_number: float


def nested_commutators(p, lam, order):
    """``O_k`` for ``k = 1..order``: ``2k - 1`` nested commutators of ``H`` around ``dH/dlam``."""
    h = build_h_ad(p, lam)
    o = _comm(h, d_h_ad_d_lambda(p))
    out = [o]
    for _ in range(order - 1):
        o = _comm(h, _comm(h, o))
        out.append(o)
    return out


def nc_gauge_potential(p, lam, order, rcond=1e-12):
    """Nested-commutator gauge ``i sum_k alpha_k O_k`` minimizing the action.

    The action is quadratic in the real coefficients, so they follow from a
    linear least-squares problem.  Columns are normalized before the solve and
    directions with relative singular value below ``rcond`` are dropped, which
    yields the minimum-norm minimizer when nested commutators are linearly
    dependent (as for two-level problems).
    """
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_NC_ORDER:
        raise ScopeError(f"nested-commutator order must be in 1..{MAX_NC_ORDER}, got {order!r}")
    h = build_h_ad(p, lam)
    dh = d_h_ad_d_lambda(p)
    ops = nested_commutators(p, lam, order)
    # G(alpha) = dH + sum_k alpha_k [H, O_k]; every [H, O_k] is Hermitian
    cols = np.stack([_comm(h, o).ravel() for o in ops], axis=1)
    design = np.concatenate([cols.real, cols.imag])
    target = -np.concatenate([dh.ravel().real, dh.ravel().imag])
    norms = np.linalg.norm(design, axis=0)
    if not np.all(np.isfinite(design)) or norms[0] == 0.0:
        raise IllConditionedError("nested commutators vanish or overflow; no expansion exists", math.inf)
    norms[norms == 0.0] = 1.0
    sv = np.linalg.svd(design / norms, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    coef, *_ = np.linalg.lstsq(design / norms, target, rcond=rcond)
    alphas = coef / norms
    a = 1j * sum(al * o for al, o in zip(alphas, ops))
    return NcExpansion(int(order), alphas, a, cond)


@dataclass(frozen=True, eq=False)
class EigenTracks:
    t: np.ndarray
    lam: np.ndarray
    dlam: np.ndarray
    cd: np.ndarray          # (N, d) levels of H_AD + dlam * A'
    adiabatic: np.ndarray   # (N, d) levels of H_AD


def eigen_tracks(p, params, times):
    """Instantaneous energy levels along a trained protocol.

    The counterdiabatic track uses the Pauli reconstruction of the gauge
    potential, which is Hermitian by construction.
    """
    basis = pauli_basis(p.n_qubits)
    bundle = forward_with_input_derivative(params, np.asarray(times, dtype=float))
    h_ad = build_h_ad(p, bundle.lam)
    h_cd = h_ad + bundle.dlam[:, None, None] * pauli_reconstruct(bundle.c, basis)
    cd = np.array([hermitian_eigensystem(m)[0] for m in h_cd])
    ad = np.array([hermitian_eigensystem(m)[0] for m in h_ad])
    return EigenTracks(bundle.t, bundle.lam, bundle.dlam, cd, ad)


def model_protocol(params, counterdiabatic=True):
    """Vectorized protocol ``t -> (lam, dlam, A')`` read off a trained network."""
    basis = pauli_basis(params.n_qubits)

    def protocol(t):
        b = forward_with_input_derivative(params, np.asarray(t, dtype=float))
        a = pauli_reconstruct(b.c, basis) if counterdiabatic else np.zeros_like(b.a_cd)
        return b.lam, b.dlam, a

    return protocol


def exact_protocol(p, schedule, counterdiabatic=True, gap_tolerance=DEFAULT_GAP_TOLERANCE):
    """Protocol driven by ``schedule(t) -> (lam, dlam)`` with the exact gauge potential."""

    def protocol(t):
        lam, dlam = schedule(np.asarray(t, dtype=float))
        lam = np.broadcast_to(np.asarray(lam, dtype=float), np.shape(t))
        dlam = np.broadcast_to(np.asarray(dlam, dtype=float), np.shape(t))
        if counterdiabatic:
            a = np.stack([exact_gauge_potential(p, x, gap_tolerance).a_exact for x in lam])
        else:
            a = np.zeros((len(lam), p.dim, p.dim), dtype=complex)
        return lam, dlam, a

    return protocol


def linear_schedule(t):
    t = np.asarray(t, dtype=float)
    return t, np.ones_like(t)


@dataclass(frozen=True, eq=False)
class FidelityTrace:
    t: np.ndarray
    fidelity: np.ndarray
    norm_drift: np.ndarray   # largest per-step drift since the previous report
    states: np.ndarray


def ground_state(h):
    return hermitian_eigensystem(h)[1][:, 0]


def evolve_fidelity(p, protocol, t_grid, dt):
    """Integrate ``i dpsi/dt = H'(t) psi`` by classical RK4 and track the ground-state overlap.

    ``psi`` starts in the ground state of ``h_initial``; fidelity is measured
    against the ground state of ``h_final`` at every point of ``t_grid``.
    Each interval of ``t_grid`` is split into equal steps no longer than
    ``dt``.  The state is renormalized after every step; a step whose norm
    drift exceeds 1e-6 raises ``StepSizeError``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a strictly increasing 1-D array")
    if not dt > 0:
        raise ValueError("dt must be positive")

    starts, sizes, owners = [], [], []
    for i, (a, b) in enumerate(zip(t_grid[:-1], t_grid[1:])):
        n = max(1, math.ceil((b - a) / dt - 1e-9))
        h = (b - a) / n
        starts.extend(a + h * np.arange(n))
        sizes.extend([h] * n)
        owners.extend([i + 1] * n)
    starts, sizes = np.array(starts), np.array(sizes)
    stage_t = np.concatenate([starts, starts + 0.5 * sizes, starts + sizes]) if starts.size else np.zeros(0)

    if stage_t.size:
        lam, dlam, a = protocol(stage_t)
        hams = build_h_ad(p, lam) + np.asarray(dlam)[:, None, None] * a
        k = starts.size
        h0, hm, h1 = hams[:k], hams[k:2 * k], hams[2 * k:]

    target = ground_state(p.h_final)
    psi = ground_state(p.h_initial).astype(complex)
    fid = np.empty(t_grid.size)
    drift = np.zeros(t_grid.size)
    states = np.empty((t_grid.size, p.dim), dtype=complex)
    fid[0] = abs(np.vdot(target, psi)) ** 2
    states[0] = psi
    worst = 0.0
    for j in range(starts.size):
        h = sizes[j]
        k1 = -1j * (h0[j] @ psi)
        k2 = -1j * (hm[j] @ (psi + 0.5 * h * k1))
        k3 = -1j * (hm[j] @ (psi + 0.5 * h * k2))
        k4 = -1j * (h1[j] @ (psi + h * k3))
        psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        norm = np.linalg.norm(psi)
        err = abs(norm - 1.0)
        if err > MAX_STEP_DRIFT:
            raise StepSizeError(err, starts[j] + h, h)
        worst = max(worst, err)
        psi = psi / norm
        if j + 1 == starts.size or owners[j + 1] != owners[j]:
            i = owners[j]
            fid[i] = abs(np.vdot(target, psi)) ** 2
            drift[i] = worst
            states[i] = psi
            worst = 0.0
    return FidelityTrace(t_grid, fid, drift, states)
