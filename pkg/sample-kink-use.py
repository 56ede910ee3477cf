#!/usr/bin/env python3
# Sample mtsim kink call: microtubule kink speed, transfer time and energetics.

from mtsim import kink

params = kink.microtubule_parameters(E=1.0e3)  # field of 1 kV/m on the dimer charge
roots = kink.solve_cubic(kink.reduce(params, 0.0).sigma)
v = kink.kink_velocity(params, roots)
print(f'roots a={roots.a:.6f} d={roots.d:.6f} b={roots.b:.6f}  v={v:.4g} m/s')
print(f'transfer time over 1 um: {kink.transfer_time(1.0e-6, v):.4g} s')
print(kink.kink_energetics(params, v))
