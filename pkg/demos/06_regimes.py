"""Uniqueness regimes over the (1/q, 1/p) square and the command line.

The classifier assigns each critical Besov space to a uniqueness or
non-uniqueness region; the map is written as CSV and summarized by counts.
The same operations are available as ``nsbesov classify`` and ``nsbesov regime-map``.
"""

import math
import tempfile
from collections import Counter
from pathlib import Path

from nsbesov.cli import main
from nsbesov.solvers import classify_regime, regime_map

for p, q in [(2, 5), (3, 2), (3, 3), (5, 1), (math.inf, math.inf)]:
    print(f"n=3, p={p}, q={q}: {classify_regime(3, p, q)}")

rows = regime_map(3, 50)
print("50x50 lattice counts:", dict(Counter(lab for _, _, lab in rows)))

# ASCII picture: rows are 1/p from 1 down to 0, columns 1/q from 0 to 1
coarse = regime_map(3, 13)
for ip in sorted({r[1] for r in coarse}, reverse=True):
    line = "".join(lab[0] if lab != "U2" else "u" for iq, jp, lab in coarse if jp == ip)
    print(f"1/p={float(ip):.3f} {line}")

with tempfile.TemporaryDirectory() as tmp:
    main(["classify", "3", "3", "2"])
    main(["regime-map", "--n", "4", "--resolution", "20", "--out", tmp])
    print("wrote", sorted(p.name for p in Path(tmp).iterdir()))
