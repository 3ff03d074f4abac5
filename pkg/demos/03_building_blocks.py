"""A two-level toy profile and the structure of its residual force.

Level one oscillates at λ^ℓ for ℓ in Λ_1 with constant amplitudes; level two
reads its amplitudes off the deformation of level one.  Every exact identity of
the construction is checked on the grid, and the force is split into its parts.
"""

from nsbesov.blocks import build_ladder, iterate_blocks, residual_force
from nsbesov.identities import identity_checks
from nsbesov.littlewood_paley import BesovParams, besov_norm
from nsbesov.nash import build_nash_system
from nsbesov.spectral import Grid

grid = Grid(3, 64)
ladder = build_ladder(2, J=2, grid=grid, Lambda=[[1], [2, 3]], scales=[0.01, 50.0])
print("ladder:", ladder.to_dict())

bundle = iterate_blocks(ladder, build_nash_system(3), grid)
force = residual_force(bundle)

for rep in identity_checks(bundle, force, nash_samples=200):
    print(rep.line())

bp_v = BesovParams(3, 2, 0)
bp_f = BesovParams(2, 1, -1.5)
print(f"‖V‖ in B^0_(3,2) = {besov_norm(bundle.V, bp_v).value:.4f}")
for name, part in [("F", force.F), ("F1", force.F1), ("F2", force.F2_total), ("F3", force.F3), ("F_top", force.F_top)]:
    print(f"‖{name}‖ in B^(-3/2)_(2,1) = {besov_norm(part, bp_f).value:.4g}")
print("the top-level linear term dominates: no later level is present to cancel it")
