"""Littlewood–Paley blocks and Besov norms of simple periodic fields.

A single Fourier mode at |ξ| = 2 sits on the plateau of exactly one dyadic
shell, so its Besov norm is 2^s times its sup.  A random field spreads over
many shells; the partition still sums back to the field.
"""

import numpy as np

from nsbesov.littlewood_paley import BesovParams, DyadicPartition, besov_norm, lp_block
from nsbesov.spectral import Grid, SpectralField, heat_semigroup, lp_norm

grid = Grid(3, 32)
part = DyadicPartition(grid)
print(f"grid {grid.n}D N={grid.N}: dyadic indices {part.indices[0]}..{part.indices[-1]}")

# one mode, one shell
wave = SpectralField.from_function(grid, lambda x, y, z: np.cos(2 * x))
for s in (-1.0, 0.0, 1.0):
    val = besov_norm(wave, BesovParams(np.inf, 2, s)).value
    print(f"cos(2x) in B^{s:+g}_(inf,2): {val:.6f}   (2^s = {2.0**s:.6f})")

# a random mean-zero field and its block decomposition
rng = np.random.default_rng(0)
f = SpectralField.from_physical(grid, rng.standard_normal(grid.shape))
f.coeffs[0, 0, 0] = 0
blocks = [lp_block(f, j, part).field for j in part.indices]
total = sum(blocks[1:], blocks[0])
print(f"telescoping error of the partition: {np.max(np.abs(total.coeffs - f.coeffs)):.2e}")
print("block L^2 norms:", " ".join(f"{lp_norm(b, 2):.3g}" for b in blocks))

# the heat semigroup damps high shells first
bp = BesovParams(2, 2, 0.5)
for t in (0.0, 0.01, 0.1, 1.0):
    rep = besov_norm(heat_semigroup(f, t), bp)
    print(f"t={t:<5} ‖e^(tΔ)f‖_B^(1/2)_(2,2) = {rep.value:.4f}  boundary fraction {rep.boundary_fraction:.1e}")
