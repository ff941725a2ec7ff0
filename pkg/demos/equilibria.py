"""The four critical points of the attitude error, the spectra that make
three of them unstable, and a trajectory leaving one of them.

Run with ``python demos/equilibria.py``.
"""

import numpy as np

from lieregulator.exosystem import harmonic_exo
from lieregulator.integrator import StepConfig
from lieregulator.lie import GroupTag, exp_map, skew
from lieregulator.regulator import MeasurementSet, RegulatorGains
from lieregulator.simulate import ClosedLoop, simulate_states
from lieregulator.so3 import chetaev_direction, classify_equilibria, geodesic_distance

SO3 = GroupTag.SO3
ms = MeasurementSet(SO3, [[1.0, 0, 0], [0, 1.5, 0], [0, 0, 0.5]])
gains = RegulatorGains(2.0, 0.4)
rep = classify_equilibria(ms, gains.kp)
print("eigenvalues of Y:", rep.eigenvalues)

for j in (1, 2, 3, 4):
    print(f"R*_{j} =\n{np.round(rep.equilibria[j], 12)}")
    if j > 1:
        ev = np.sort(np.linalg.eigvals(rep.upsilon[j]).real)
        print(f"  spectrum of Upsilon_{j}: {ev}  (closed form {np.sort(rep.spectra[j])})")

## Start 1e-3 rad from R*_2 along its most unstable direction
exo, w0 = harmonic_exo([1, 2, 3], [1, 5, 7], SO3)
lam, v = chetaev_direction(rep, 2)
Xd0 = np.eye(3)
E_r = rep.equilibria[2] @ exp_map(SO3, skew(1e-3 * v))
loop = ClosedLoop("kinematic_so3", ms, exo, gains, Xd0 @ E_r.T, Xd0, w0, w0.copy())
hist = simulate_states(loop, 20.0, StepConfig(1e-2), log_every=10)
for t, R, Rd in zip(hist.t[::10], hist.X[::10], hist.X_d[::10]):
    Er = R.T @ Rd
    print(f"t={t:5.1f}  distance to R*_2: {geodesic_distance(Er, rep.equilibria[2]):.3e}  "
          f"to identity: {geodesic_distance(Er, np.eye(3)):.3e}")
