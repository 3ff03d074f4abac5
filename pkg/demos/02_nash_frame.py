"""Decomposing matrices near the identity over a fixed lattice frame.

Every symmetric matrix in a small ball around Id is written as a positive
combination Σ Γ_k(M)² k⊗k.  The weights stay inside a fixed interval, and the
same formula applied pointwise turns a velocity gradient into amplitude fields.
"""

import numpy as np

from nsbesov.identities import nash_sample_error
from nsbesov.nash import build_nash_system, gamma_field, nash_reconstruct
from nsbesov.spectral import Grid, SpectralField, deformation, helmholtz_project

sys3 = build_nash_system(3)
print(f"{sys3.size} directions, domain radius r0 = {sys3.r0}")
for k, b in zip(sys3.K_set, sys3.a_dirs):
    print(f"  k = {tuple(int(v) for v in k)}   oscillation direction {tuple(int(v) for v in b)}")

print("Γ(Id) =", np.round(sys3.gamma(np.eye(3)), 6))
lo, hi = sys3.gamma_bounds()
print(f"Γ range over the ball: [{lo:.4f}, {hi:.4f}]")

rng = np.random.default_rng(1)
A = rng.uniform(-1, 1, (3, 3))
M = np.eye(3) + sys3.r0 * (A + A.T) / 2
print(f"reconstruction error for one sample: {np.max(np.abs(nash_reconstruct(M, sys3) - M)):.1e}")
print(f"worst error over 1000 samples: {nash_sample_error(sys3, rng, 1000):.1e}")

# pointwise: Γ_k(Id - Dv/scale) for a smooth divergence-free v
grid = Grid(3, 16)
v = helmholtz_project(
    SpectralField.from_function(grid, lambda x, y, z: 0.05 * np.stack([np.sin(y), np.sin(z), np.sin(x)]), rank="vector")
)
sup = float(np.max(np.abs(deformation(v).physical())))
scale = 2 * sup / sys3.r0
fields = gamma_field(v, sys3, scale)
print(f"max |Dv| = {sup:.4f}; with scale {scale:.4f} the amplitude fields range over")
for k, g in zip(sys3.K_set, fields):
    vals = g.physical()
    print(f"  k = {tuple(int(c) for c in k)}: [{vals.min():.4f}, {vals.max():.4f}]")
