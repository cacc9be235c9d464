"""Walk through the phase-flip example end to end.

An agent who can only apply the phase flip Z carves a subsystem whose states
are unordered pairs {p, 1-p} and whose transformation monoid is trivial; the
adversary is generated by diagonal unitaries plus the irrep swap.

Run:  python scripts/phase_flip_demo.py
"""

import numpy as np

from qsubsys.carver import AgentSpec, carve
from qsubsys.channels import StateDM
from qsubsys.group_rep import adversarial_group, close_group, isotypic_decompose
from qsubsys.purification import connect_purifications

Z = np.diag([1.0, -1.0]).astype(complex)


def main():
    rep = close_group([Z])
    print(f"group order: {rep.order}")
    iso = isotypic_decompose(rep, seed=0)
    print(f"isotypic blocks (irrep dim, multiplicity): {iso.blocks}")

    adv = adversarial_group(iso)
    print(f"operator commutant dimension: {adv.commutant_dim}")
    print(f"irrep permutations in the adversarial group: {adv.permutations()}")
    for entry in adv.entries:
        omega_z = entry.omega[rep.index_of(Z)]
        print(f"  sector permutation={entry.permutation}  omega(Z)={omega_z:+.0f}")

    sub = carve(AgentSpec(2, "group_rep", matrices=[Z]), seed=0)
    rng = np.random.default_rng(1)
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    v /= np.linalg.norm(v)
    print(f"\nrandom pure state, p = |<0|psi>|^2 = {abs(v[0])**2:.4f}")
    print(f"carved class (unordered pair): {sub.quotient(StateDM.pure(v))}")
    print(f"class of Z|psi>:               {sub.quotient(StateDM.pure(Z @ v))}")

    # essential uniqueness: two purifications of {0.3, 0.7} differ by a phase
    p = np.array([0.7, 0.3])
    psi = np.sqrt(p)
    psi2 = np.sqrt(p) * np.exp(1j * np.array([0.4, 1.9]))
    wit = connect_purifications(iso, psi, psi2)
    print("\nconnecting unitary between two purifications of {0.7, 0.3}:")
    print(np.round(wit.connecting_unitary, 4))
    print(f"inside the adversarial group: {adv.contains(wit.connecting_unitary)}")


if __name__ == "__main__":
    main()
