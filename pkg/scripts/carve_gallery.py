"""Carve the subsystem of every supported agent kind and print what comes out.

Run:  python scripts/carve_gallery.py [seed]
"""

import sys

import numpy as np

from qsubsys.carver import AgentSpec, carve, check_no_signalling
from qsubsys.channels import StateDM
from qsubsys.numerics import kron, random_density_matrix

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def show(label, agent, seed):
    sub = carve(agent, seed=seed)
    rng = np.random.default_rng([seed, 7])
    states = [StateDM(sub.source_dim, random_density_matrix(sub.source_dim, rng))
              for _ in range(8)]
    advs = [sub.adversary.sample(rng) for _ in range(8)]
    nosig = check_no_signalling(sub, advs, states)
    params = sub.state_space_params
    print(f"{label:34} -> {sub.state_space_tag:24} {params}")
    print(f"{'':34}    adversary: {sub.adversary.text}")
    print(f"{'':34}    no-signalling deviation over {nosig.checks} samples: "
          f"{nosig.max_deviation:.2e}")


def main():
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    show("local algebra M2(x)I in M4",
         AgentSpec(4, "algebra_generators", matrices=[kron(X, I2), kron(Z, I2)]), seed)
    show("diagonal algebra in M3",
         AgentSpec(3, "algebra_generators",
                   matrices=[np.diag([1.0, 2.0, 3.0]).astype(complex)]), seed)
    for name in ("multiphase_covariant", "dephasing_covariant", "strictly_incoherent",
                 "phase_covariant", "classical", "incoherent", "maximally_incoherent",
                 "basis_preserving", "full"):
        show(f"named monoid {name}", AgentSpec(3, "named_monoid", monoid=name), seed)
    show("diagonal group rep {I, Z}", AgentSpec(2, "group_rep", matrices=[Z]), seed)


if __name__ == "__main__":
    main()
