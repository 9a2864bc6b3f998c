"""
Spectral reference solutions
============================

Evolve Allen-Cahn and Burgers in Fourier space with classical RK4 and
dealiased products, then check fourth-order self-convergence.
"""
import math

import numpy as np

from teng.pde import allen_cahn, burgers, initial_condition, two_dim_exp
from teng.spectral import sample_spectrum, spectral_rk4_evolve

ic = two_dim_exp()
u0_func = lambda p: initial_condition(ic, p).value

for pde, kmax in ((allen_cahn(), 48), (burgers(), 64)):
    u0 = sample_spectrum(u0_func, 256, kmax, None, 2)
    finals = [spectral_rk4_evolve(pde, u0, d, 0.5, eval_n=64).fields[-1]
              for d in (0.02, 0.01, 0.005)]
    e1 = np.linalg.norm(finals[0] - finals[1])
    e2 = np.linalg.norm(finals[1] - finals[2])
    print(f"{pde.kind:<10} successive differences {e1:.2e} {e2:.2e}, "
          f"order {math.log2(e1 / e2):.2f}")
