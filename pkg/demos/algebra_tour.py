# Operator bases, structure constants and one discrete phase point.

import numpy as np

from ctwa import build_basis, neel_state, structure_constants
from ctwa.clustering import make_clustering
from ctwa.sampling import sample_discrete

basis = build_basis(2)
print("two-spin basis:", " ".join(basis.labels))

# [X_p, X_q] = i f_pqr X_r; every nonzero entry is +-2
f = structure_constants(basis)
print(f"{len(f)} nonzero structure constants, values {sorted(set(f.value.tolist()))}")
print("a few of them:")
print("\n".join(f.dump(basis).splitlines()[:6]))

# one draw for a Neel pair: z components are fixed, transverse ones are +-1,
# and every two-site component is the product of its single-site factors
rng = np.random.default_rng(3)
x = sample_discrete(neel_state(2), make_clustering([[0, 1]]), {2: basis}, rng)
for label, value in zip(basis.labels, x):
    print(f"  {label}: {value:+.0f}")

# cluster sizes grow as 4^n - 1
for n in range(1, 7):
    print(n, build_basis(n).size)
