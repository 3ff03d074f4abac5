"""Norms of modulated superpositions and the support of modulated blocks.

A smooth bump modulated at frequencies λ^ℓ a_k has a Besov norm governed by
the ℓ^q sum of λ^{sℓ}|b_ℓ|; the ratio to that main term is stable under grid
refinement.  Angular and dyadic localizations of a modulated block keep their
spectrum away from the origin.
"""

import math

from nsbesov.estimates import SuperpositionSpec, alpha, beta, prop31_refinement, scan_freq_support, sigma
from nsbesov.littlewood_paley import AngularLocalizers, BesovParams
from nsbesov.nash import build_nash_system

cases = [
    (SuperpositionSpec(2, 16, [[1, 0]], [1.0]), BesovParams(2, 2, 0)),
    (SuperpositionSpec(2, 8, [[1, 0], [0, 1]], [1.0, -1.0]), BesovParams(4, 1, -1)),
    (SuperpositionSpec(3, 8, [[1, 0, 0], [0, 1, 0], [1, 1, 0]], [1.0]), BesovParams(3, 2, 1)),
]
for spec, bp in cases:
    coarse, fine, refined = prop31_refinement(spec, bp)
    print(f"{refined.name}: ratio {coarse.ratio:.4f} -> {fine.ratio:.4f}  ({'stable' if refined.passed else 'unstable'})")

loc = AngularLocalizers(build_nash_system(3).a_dirs)
reports = scan_freq_support(loc, 16, 1, span=3, points=64)
worst = max(r.measured[1] for r in reports)
c_min = min(r.measured[0] for r in reports)
print(f"{len(reports)} localized blocks: worst inner mass {worst:.1e}, smallest measured gap constant {c_min:.3f}")

print(f"σ_1 for Λ = {{1, 2}}, s = 0, q = 2, λ = 4: {sigma([1, 2], 0.0, 2, 4):.4f}")
for n in (3, 4, 5):
    print(f"n = {n}: α(∞) = {alpha(math.inf, n)}, β = {beta(n)}")
