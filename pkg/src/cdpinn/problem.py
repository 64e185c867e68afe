"""Initial/final Hamiltonian pairs: built-in H2 (STO-3G) data and JSON files."""
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, UnknownDistanceError, UnsupportedVersion, ValidationError
from .linalg import hermiticity_deviation

SCHEMA_VERSION = 1

# Hartree.  Per bond distance (angstrom): the four diagonal entries shared by
# both operators, and the X-X coupling present only in the final operator.
_H2_STO3G = {
    1.0: ((-0.5490812, -1.0661087, 0.00400595, -0.5490812), 0.19679058),
    1.5: ((-0.6610488, -0.91087353, -0.3944683, -0.6610488), 0.22953594),
    2.0: ((-0.66539884, -0.7837927, -0.5412806, -0.66539884), 0.25913846),
    2.5: ((-0.649429, -0.7029436, -0.5944048, -0.649429), 0.28221005),
}
H2_DISTANCES = tuple(sorted(_H2_STO3G))


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    n_qubits: int
    h_initial: np.ndarray
    h_final: np.ndarray
    label: str = ""
    bond_distance: float = None

    @property
    def dim(self):
        return 2**self.n_qubits

    def __eq__(self, other):
        if not isinstance(other, ProblemSpec):
            return NotImplemented
        return (
            self.n_qubits == other.n_qubits
            and self.label == other.label
            and self.bond_distance == other.bond_distance
            and np.array_equal(self.h_initial, other.h_initial)
            and np.array_equal(self.h_final, other.h_final)
        )

    def digest(self):
        """SHA-256 of the canonical JSON form."""
        text = json.dumps(problem_to_dict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def validate(spec):
    """Raise ``ValidationError`` if ``spec`` breaks a structural invariant."""
    if not isinstance(spec.n_qubits, int) or spec.n_qubits < 1:
        raise ValidationError("dimension", f"n_qubits must be a positive integer, got {spec.n_qubits!r}")
    for name in ("h_initial", "h_final"):
        m = getattr(spec, name)
        if m.ndim != 2 or m.shape != (spec.dim, spec.dim):
            raise ValidationError("dimension", f"{name} has shape {m.shape}, expected {(spec.dim, spec.dim)}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("finite", f"{name} has non-finite entries")
        if hermiticity_deviation(m) > 1e-12:
            raise ValidationError("hermiticity", f"{name} is not Hermitian")
        if np.max(np.abs(m.imag)) > 1e-12:
            raise ValidationError("real", f"{name} has imaginary entries")
    return spec


def make_problem(h_initial, h_final, label="", bond_distance=None, n_qubits=None):
    h_initial = np.array(h_initial, dtype=complex)
    h_final = np.array(h_final, dtype=complex)
    if n_qubits is None:
        n_qubits = max(int(round(math.log2(max(h_initial.shape[0], 1)))), 1)
    h_initial.setflags(write=False)
    h_final.setflags(write=False)
    return validate(ProblemSpec(int(n_qubits), h_initial, h_final, label, bond_distance))


def builtin_h2(d):
    """H2 in the STO-3G basis at bond distance ``d`` (angstrom), two qubits.

    The initial operator is the diagonal Hartree-Fock Hamiltonian and the final
    one the full configuration-interaction Hamiltonian.
    """
    key = next((k for k in H2_DISTANCES if math.isclose(float(d), k, abs_tol=1e-9)), None)
    if key is None:
        raise UnknownDistanceError(d, H2_DISTANCES)
    diag, coupling = _H2_STO3G[key]
    h_hf = np.diag(diag).astype(complex)
    h_fci = h_hf.copy()
    for i, j in ((0, 3), (3, 0), (1, 2), (2, 1)):
        h_fci[i, j] = coupling
    return make_problem(h_hf, h_fci, label=f"h2_sto3g_{key:.1f}", bond_distance=key, n_qubits=2)


def d_h_ad_d_lambda(spec):
    """Derivative of the interpolated Hamiltonian with respect to the schedule."""
    return spec.h_final - spec.h_initial


def problem_to_dict(spec):
    def block(m):
        out = {"re": m.real.tolist()}
        if np.any(m.imag):
            out["im"] = m.imag.tolist()
        return out

    doc = {"schema_version": SCHEMA_VERSION, "label": spec.label, "n_qubits": spec.n_qubits}
    if spec.bond_distance is not None:
        doc["bond_distance_angstrom"] = spec.bond_distance
    doc["h_initial"] = block(spec.h_initial)
    doc["h_final"] = block(spec.h_final)
    return doc


def problem_from_dict(doc):
    if not isinstance(doc, dict):
        raise FormatError("problem document must be a JSON object")
    version = doc.get("schema_version")
    if version is None:
        raise FormatError("missing schema_version")
    if version != SCHEMA_VERSION:
        raise UnsupportedVersion(f"problem schema_version {version!r} is not supported (expected {SCHEMA_VERSION})")
    try:
        n_qubits = doc["n_qubits"]
        mats = []
        for name in ("h_initial", "h_final"):
            blk = doc[name]
            re = np.array(blk["re"], dtype=float)
            im = np.array(blk["im"], dtype=float) if "im" in blk else np.zeros_like(re)
            if re.shape != im.shape:
                raise ValidationError("dimension", f"{name}: re/im shapes differ")
            mats.append(re + 1j * im)
        label = str(doc.get("label", ""))
        bond = doc.get("bond_distance_angstrom")
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed problem document: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise FormatError(f"malformed matrix data: {exc}") from exc
    if not isinstance(n_qubits, int) or isinstance(n_qubits, bool):
        raise FormatError("n_qubits must be an integer")
    for m in mats:
        m.setflags(write=False)
    spec = ProblemSpec(n_qubits, mats[0], mats[1], label, None if bond is None else float(bond))
    return validate(spec)


def write_problem(spec, path):
    Path(path).write_text(json.dumps(problem_to_dict(spec), indent=2) + "\n")


def load_problem(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return problem_from_dict(doc)


def resolve_problem(tag):
    """Turn ``h2:<d>`` or a JSON path into a validated ``ProblemSpec``."""
    if isinstance(tag, ProblemSpec):
        return tag
    text = str(tag)
    if text.lower().startswith("h2:"):
        try:
            d = float(text[3:])
        except ValueError:
            raise UnknownDistanceError(text[3:], H2_DISTANCES) from None
        return builtin_h2(d)
    path = Path(text)
    if not path.exists():
        raise FormatError(
            f"unknown problem {text!r}: expected a file path or one of "
            + ", ".join(f"h2:{d:.1f}" for d in H2_DISTANCES)
        )
    return load_problem(path)


def shifted(spec, lambda_start):
    """Same interpolation path restricted to schedule values in ``[lambda_start, 1]``.

    The returned problem starts at ``(1 - s) H_i + s H_f`` with ``s = lambda_start``,
    so its own schedule ``mu`` maps to ``s + (1 - s) mu`` of the original.
    """
    s = float(lambda_start)
    h0 = (1.0 - s) * spec.h_initial + s * spec.h_final
    return make_problem(h0, spec.h_final, label=f"{spec.label}@{s:g}", bond_distance=spec.bond_distance,
                        n_qubits=spec.n_qubits)
