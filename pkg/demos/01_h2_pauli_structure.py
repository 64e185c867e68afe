"""H2 in STO-3G: spectra and Pauli structure of the built-in problems.

The Hartree-Fock operator is diagonal.  The FCI operator adds a single real
coupling between the |00> and |11> configurations, which in the Pauli basis
appears as an XX term.  This script prints both spectra and the nonzero Pauli
coefficients for every bond distance.
"""
import numpy as np

from cdpinn.linalg import hermitian_eigensystem, pauli_basis, pauli_decompose
from cdpinn.problem import H2_DISTANCES, builtin_h2

basis = pauli_basis(2)

for d in H2_DISTANCES:
    p = builtin_h2(d)
    e_hf, _ = hermitian_eigensystem(p.h_initial)
    e_fci, _ = hermitian_eigensystem(p.h_final)
    print(f"d = {d:.1f} A")
    print("  HF  levels:", np.array2string(e_hf, precision=8))
    print("  FCI levels:", np.array2string(e_fci, precision=8))
    c = pauli_decompose(p.h_final, basis).real
    terms = [f"{c[i]:+.8f} {label}" for i, label in enumerate(basis.labels) if abs(c[i]) > 1e-12]
    print("  H_FCI =", "  ".join(terms))

# the two middle HF levels coincide; the path never couples them, so the
# degeneracy is harmless, but an eigensolver is free to mix them at lambda = 0
e, _ = hermitian_eigensystem(builtin_h2(1.0).h_initial)
print("\nd = 1.0 HF levels:", e, "-> two levels at", e[1])
