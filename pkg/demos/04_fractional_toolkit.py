"""Fractional-norm toolkit and the coercivity of the parabolic form.

The temporal half-order Sobolev machinery: padded-DFT fractional norms,
the discrete Hilbert transform, and the phase rotation
cos(phi) I - sin(phi) H.  Pairing the time derivative against the
rotated field returns exactly sin(phi) times the half-order seminorm,
which is what makes the space-time form coercive in the graph norm.
"""

import numpy as np

from rrlab.fracnorm import (FractionalNormConfig, TimeSignal,
                            fractional_norm, hilbert_transform,
                            padded_extension, parabolic_coercivity,
                            random_smooth_field, trace_space_norm)
from rrlab.lab import setup_problem
from rrlab.mesh import ProblemSpec
from rrlab.subsolve import InterfaceSignal

print(__doc__)

# -- fractional norms of a bump ------------------------------------------
n, tau = 128, 1.0 / 128
t = np.arange(n + 1) * tau
u = np.exp(-60.0 * (t - 0.5) ** 2) * np.sin(6 * np.pi * t) ** 2
u[0] = 0.0

print("fractional norms of a smooth interior bump (pad factor 8):")
for sigma in (0.0, 0.25, 0.5):
    z = fractional_norm(TimeSignal(u, tau, mode="zero"),
                        FractionalNormConfig(sigma, mode="zero"))
    e = fractional_norm(TimeSignal(u, tau, mode="even"),
                        FractionalNormConfig(sigma, mode="even"))
    print(f"  sigma={sigma:4.2f}: zero-extension {z:.6f}   "
          f"even-extension {e:.6f}   (agree within "
          f"{100 * abs(z - e) / z:.2f}%)")

# -- Hilbert transform rotates phases --------------------------------------
w = padded_extension(u, 8, "zero")
h = hilbert_transform(w)
print(f"\nHilbert transform: ||H u|| / ||u|| = "
      f"{np.linalg.norm(h - h.mean()) / np.linalg.norm(w - w.mean()):.6f} "
      "(isometry off the mean)")

# -- coercivity ratios on a 1D subdomain -----------------------------------
spec = ProblemSpec(dimension=1, nx=16, interface_x=0.5, n_steps=16)
setup = setup_problem(spec)
ops = setup.ops_1
rng = np.random.default_rng(0)
phi = 0.1
ratios = []
for _ in range(50):
    field = random_smooth_field(setup.mesh, setup.dec, ops, rng)
    rep = parabolic_coercivity(ops, field, phi)
    ratios.append(rep.ratio_full)
print(f"\ncoercivity check at phi={phi}: 50 random smooth fields give")
print(f"  pairing / graph-norm ratios in [{min(ratios):.4f}, "
      f"{max(ratios):.4f}]  (all positive)")

# -- interface trace norm ---------------------------------------------------
spec2 = ProblemSpec(dimension=2, nx=16, ny=16, interface_x=0.5, n_steps=16)
setup2 = setup_problem(spec2)
from rrlab.assembly import assemble_interface_stiffness
Kg = assemble_interface_stiffness(setup2.mesh, setup2.dec)
ys = setup2.mesh.nodes[setup2.dec.interface, 1]
times = np.arange(1, 17) / 16.0
eta = InterfaceSignal(np.outer(np.sin(np.pi * times),
                               np.sin(np.pi * ys)))
val = trace_space_norm(eta, setup2.ops_1.M_gamma, Kg, tau=1.0 / 16)
print(f"\ninterface trace norm (quarter-order in time, half-order in "
      f"space)\nof a smooth test trace: {val:.6f}")
