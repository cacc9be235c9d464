"""Exhibit degradation-chain certificates for state equivalence.

Two states are equivalent for an agent when adversary degradations connect
them through a finite chain; the oracle returns the chain with its witness
channel pairs, each link checkable by direct application.

Run:  python scripts/chain_oracle_demo.py
"""

import numpy as np

from qsubsys.carver import AgentSpec, carve, states_equivalent_by_chain
from qsubsys.channels import StateDM, apply
from qsubsys.numerics import kron, max_abs, random_density_matrix
from qsubsys.star_algebra import trace_out_channel

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def main():
    sub = carve(AgentSpec(4, "algebra_generators",
                          matrices=[kron(X, I2), kron(Z, I2)]), seed=0)
    dec = sub.decomposition
    frame = dec.unitary.conj().T

    # two states with the same reduced block state but different environments
    sigma = random_density_matrix(2, 1)
    rho1 = StateDM(4, frame @ kron(sigma, random_density_matrix(2, 2)) @ dec.unitary)
    rho2 = StateDM(4, frame @ kron(sigma, random_density_matrix(2, 3)) @ dec.unitary)
    print("quotients equal:",
          max_abs(sub.quotient(rho1) - sub.quotient(rho2)) < 1e-9)

    d0 = trace_out_channel(dec)  # the commutant-side erasure witness
    result = states_equivalent_by_chain(rho1, rho2, [d0], max_words=2)
    print(f"chain search: {result.status}")
    cert = result.certificate
    print(f"chain length: {len(cert.states)} states, {len(cert.links)} links")
    for i, link in enumerate(cert.links):
        lhs = apply(link.forward, cert.states[i]).matrix
        rhs = apply(link.backward, cert.states[i + 1]).matrix
        print(f"  link {i}: residual {max_abs(lhs - rhs):.2e}")

    # a pair the adversary cannot connect: different block states
    rho3 = StateDM(4, frame @ kron(random_density_matrix(2, 4), sigma) @ dec.unitary)
    result = states_equivalent_by_chain(rho1, rho3, [d0], max_words=2)
    print(f"\ninequivalent pair: {result.status} "
          f"(one-sided: not a proof, but the quotients differ by "
          f"{max_abs(sub.quotient(rho1) - sub.quotient(rho3)):.3f})")


if __name__ == "__main__":
    main()
