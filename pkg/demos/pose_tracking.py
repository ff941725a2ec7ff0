"""The same regulator on SE(2) and SE(3): landmarks in homogeneous
coordinates drive both the rotation and the translation error to zero.

Run with ``python demos/pose_tracking.py``.
"""

import numpy as np

from lieregulator.runner import run_log
from lieregulator.scenario import load_scenario

for name in ("se2_tracking", "se3_tracking"):
    scenario = load_scenario(name)
    log = run_log(scenario)
    print(f"{name}: group {scenario.tag.value}, {scenario.loop.ms.nu} landmarks, status {log.status}")
    for t in (0.0, 10.0, 30.0, 60.0):
        i = int(np.argmin(np.abs(log.t - t)))
        print(f"  t={log.t[i]:5.1f}  ||E_r - I||_F={log['group_error'][i]:.3e}  "
              f"sum|e|^2={log['e_sq_sum'][i]:.3e}  |w~|={log['w_tilde_norm'][i]:.3e}")
    ## L never increases
    print(f"  largest one-sample increase of L: {np.diff(log['L']).max():.2e}")
