"""A short training run and what the network has learned so far.

Runs a few thousand epochs of the desk profile on h2:1.0 and prints the loss
breakdown, the learned schedule and the dominant Pauli coefficients of the
gauge potential.  The full desk run (50k epochs) is `cdpinn train --profile desk`.
"""
import sys

import numpy as np

from cdpinn.linalg import pauli_basis
from cdpinn.net import forward_with_input_derivative
from cdpinn.problem import builtin_h2
from cdpinn.train import TrainConfig, train

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
p = builtin_h2(1.0)
config = TrainConfig.profile("desk", epochs=epochs, seed=1, log_every=max(epochs // 10, 1))


def show(epoch, b, seconds):
    print(f"epoch {epoch:>6}  total {b.l_total:10.4e}  ic {b.l_ic:9.2e}  fc {b.l_fc:9.2e}  "
          f"action {b.l_action:9.2e}  ad {b.l_adiabaticity:9.2e}  coupling {b.l_coupling:9.2e}  ({seconds:.0f}s)")


state = train(p, config, sink=show)

t = np.linspace(0, 1, 11)
b = forward_with_input_derivative(state.params, t)
print("\n   t   lambda  dlambda/dt")
for row in zip(t, b.lam, b.dlam):
    print("{:4.1f}  {:7.4f}  {:8.4f}".format(*row))

basis = pauli_basis(2)
mean_abs = np.abs(forward_with_input_derivative(state.params, np.linspace(0, 1, 256)).c).mean(axis=0)
top = np.argsort(-mean_abs)[:4]
print("\nlargest mean |C|:", ", ".join(f"{basis.labels[i]}={mean_abs[i]:.3f}" for i in top))
