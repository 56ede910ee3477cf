#!/usr/bin/env python3
# Sample mtsim decoherence calls: Lindblad dephasing of a qubit and a string collapse-time estimate.

import numpy as np
from mtsim import decoherence

sigma_z = np.diag([1.0, -1.0])
system = decoherence.OpenSystem(H=np.diag([0.0, 1.0]), lindblad_ops=[0.5 * sigma_z])
rho0 = decoherence.DensityMatrix.from_state([2 ** -0.5, 2 ** -0.5])
rho1 = decoherence.lindblad_evolve(rho0, system, dt=0.01, n_steps=100)
print(f'|rho_01| after t=1: {abs(rho1.entries[0, 1]):.6f}  (exp(-1)/2 = {np.exp(-1) / 2:.6f})')

inputs = decoherence.CollapseInputs(E_eV=1.0, N=1.0e12)
print(f'string collapse time: {decoherence.collapse_time_string(inputs):.4g} s')
