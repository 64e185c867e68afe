"""Hamiltonian assembly and the physics-informed loss terms.

Every loss accepts a batched ``OutputBundle`` and averages over its points.
With ``grad=True`` a loss also returns a ``BundleGrad``: the derivative of the
loss value with respect to each network output, which ``net.loss_gradient``
back-propagates into the parameters.  Squared magnitudes of matrices are
squared Frobenius norms throughout.
"""
from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import ConfigError
from .linalg import pauli_basis, pauli_reconstruct
from .net import BundleGrad
from .problem import d_h_ad_d_lambda


@dataclass(frozen=True)
class LossWeights:
    w_ic: float = 1e3
    w_fc: float = 1e3
    w_action: float = 1e2
    w_ad: float = 0.5
    w_coupling: float = 2.5e2

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"loss weight {f.name} must be positive, got {v!r}")


@dataclass(frozen=True)
class LossBreakdown:
    l_ic: float
    l_fc: float
    l_action: float
    l_adiabaticity: float
    l_coupling: float
    l_total: float
    hermiticity_diag: float

    COLUMNS = ("l_ic", "l_fc", "l_action", "l_adiabaticity", "l_coupling", "l_total", "hermiticity_diag")

    def as_tuple(self):
        return astuple(self)

    def as_dict(self):
        return dict(zip(self.COLUMNS, self.as_tuple()))


def _re_inner(x, y):
    """Re <x, y> over the trailing matrix axes."""
    return np.sum(x.real * y.real + x.imag * y.imag, axis=(-2, -1))


def _fro2(x):
    return np.sum(x.real**2 + x.imag**2, axis=(-2, -1))


def _comm(a, b):
    return a @ b - b @ a


def build_h_ad(p, lam):
    """``(1 - lam) H_initial + lam H_final`` for a scalar or an array of ``lam``."""
    lam = np.asarray(lam, dtype=float)
    return (1.0 - lam)[..., None, None] * p.h_initial + lam[..., None, None] * p.h_final


def build_total_h(p, bundle):
    return build_h_ad(p, bundle.lam) + bundle.dlam[:, None, None] * bundle.a_cd


def _endpoint_loss(p, bundle, weight, lam_target, h_target, grad):
    n = len(bundle)
    dh = d_h_ad_d_lambda(p)
    resid = build_total_h(p, bundle) - h_target
    lam_err = bundle.lam - lam_target
    value = weight * (np.mean(lam_err**2) + np.mean(_fro2(resid)))
    if not grad:
        return float(value)
    g = BundleGrad.zeros_like(bundle)
    s = 2.0 * weight / n
    g.lam = s * (lam_err + _re_inner(np.broadcast_to(dh, resid.shape), resid))
    g.dlam = s * _re_inner(bundle.a_cd, resid)
    g.a_cd = s * bundle.dlam[:, None, None] * resid
    return float(value), g


def loss_ic(p, bundle, w, grad=False):
    """Start-time condition: schedule at 0 and total Hamiltonian equal to ``h_initial``."""
    return _endpoint_loss(p, bundle, w.w_ic, 0.0, p.h_initial, grad)


def loss_fc(p, bundle, w, grad=False):
    """End-time condition: schedule at 1 and total Hamiltonian equal to ``h_final``."""
    return _endpoint_loss(p, bundle, w.w_fc, 1.0, p.h_final, grad)


def euler_lagrange_residual(p, lam, a_cd):
    """``[i dH/dlam - [A, H], H]`` with ``H`` the interpolated Hamiltonian.

    Vanishes for the exact gauge potential.  Broadcasts over leading axes.
    """
    dh = d_h_ad_d_lambda(p)
    h = build_h_ad(p, lam)
    return _comm(1j * dh - _comm(a_cd, h), h)


def _right_commutator_op(m):
    """Matrix ``S`` with ``vec([A, m]) = vec(A) @ S`` for row-major ``vec``."""
    eye = np.eye(m.shape[0])
    return np.kron(eye, m) - np.kron(m.T, eye)


def loss_least_action(p, bundle, w, grad=False):
    """Mean squared Frobenius norm of the Euler-Lagrange commutator."""
    n = len(bundle)
    d = p.dim
    dh = d_h_ad_d_lambda(p)
    s_init = _right_commutator_op(p.h_initial)
    s_dh = _right_commutator_op(dh)
    lam = bundle.lam[:, None]

    def ad_h(v):  # v -> vec([V, H(lam)]) row-wise
        return v @ s_init + lam * (v @ s_dh)

    a = bundle.a_cd.reshape(n, d * d)
    ah = ad_h(a)
    # [i dH, H] = i [dH, H_initial] does not depend on lam
    x = (1j * (dh @ p.h_initial - p.h_initial @ dh)).reshape(1, d * d) - ad_h(ah)
    sq = x.real**2 + x.imag**2
    value = w.w_action * np.mean(np.sum(sq, axis=1))
    if not grad:
        return float(value)
    s = 2.0 * w.w_action / n
    g = BundleGrad.zeros_like(bundle)
    # x is linear in A through A -> -[[A, H], H]; that map is self-adjoint for Hermitian H
    g.a_cd = (-s * ad_h(ad_h(x))).reshape(n, d, d)
    dx_dlam = -ad_h(a @ s_dh) - ah @ s_dh
    g.lam = s * np.sum(x.real * dx_dlam.real + x.imag * dx_dlam.imag, axis=1)
    return float(value), g


def loss_adiabaticity(bundle, w, grad=False):
    n = len(bundle)
    value = w.w_ad * np.mean(bundle.dlam**2)
    if not grad:
        return float(value)
    g = BundleGrad.zeros_like(bundle)
    g.dlam = (2.0 * w.w_ad / n) * bundle.dlam
    return float(value), g


def loss_coupling(bundle, basis, w, grad=False):
    """Mismatch between the raw gauge output and its real Pauli expansion."""
    n = len(bundle)
    flat = basis.strings.reshape(len(basis), -1)
    resid = bundle.a_cd.reshape(n, -1) - bundle.c @ flat
    value = w.w_coupling * np.mean(np.sum(resid.real**2 + resid.imag**2, axis=1))
    if not grad:
        return float(value)
    s = 2.0 * w.w_coupling / n
    g = BundleGrad.zeros_like(bundle)
    g.a_cd = (s * resid).reshape(bundle.a_cd.shape)
    # d/dc_P ||R||^2 = -2 Re <P, R>
    g.c = -s * (resid.real @ flat.real.T + resid.imag @ flat.imag.T)
    return float(value), g


def hermiticity_diag(bundle):
    a = bundle.a_cd
    return float(np.mean(_fro2(a - np.conj(np.swapaxes(a, -1, -2)))))


def total_loss(p, start, end, interior, w, basis=None, grad=False):
    """Weighted sum of all terms.

    ``start`` and ``end`` are bundles evaluated at ``t_min`` and ``t_max``;
    ``interior`` holds the collocation points.  With ``grad=True`` returns
    ``(breakdown, (g_start, g_end, g_interior))``.
    """
    if basis is None:
        basis = pauli_basis(p.n_qubits)
    if not grad:
        terms = (
            loss_ic(p, start, w), loss_fc(p, end, w), loss_least_action(p, interior, w),
            loss_adiabaticity(interior, w), loss_coupling(interior, basis, w),
        )
        return LossBreakdown(*terms, float(sum(terms)), hermiticity_diag(interior))

    l_ic, g_start = loss_ic(p, start, w, grad=True)
    l_fc, g_end = loss_fc(p, end, w, grad=True)
    l_act, g_act = loss_least_action(p, interior, w, grad=True)
    l_ad, g_ad = loss_adiabaticity(interior, w, grad=True)
    l_cp, g_cp = loss_coupling(interior, basis, w, grad=True)
    total = l_ic + l_fc + l_act + l_ad + l_cp
    breakdown = LossBreakdown(l_ic, l_fc, l_act, l_ad, l_cp, total, hermiticity_diag(interior))
    return breakdown, (g_start, g_end, g_act + g_ad + g_cp)


def make_training_loss(p, w, n_start=1, n_end=1, basis=None):
    """Loss closure for ``net.loss_gradient`` over ``[starts, ends, interior]`` batches."""
    basis = basis or pauli_basis(p.n_qubits)
    i0, i1 = n_start, n_start + n_end

    def loss_fn(bundle):
        breakdown, grads = total_loss(
            p, bundle.take(slice(0, i0)), bundle.take(slice(i0, i1)), bundle.take(slice(i1, None)),
            w, basis, grad=True,
        )
        return breakdown.l_total, BundleGrad.concat(grads), breakdown

    return loss_fn
