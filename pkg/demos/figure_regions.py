"""Enclosure regions for m = 1, p = 1.2 as the coupling shrinks.

Prints the admissible fraction and the number of connected lobes per coupling
and writes one PGM mask per coupling into out/figure_regions_py/.
"""

from pathlib import Path

import numpy as np

from bilayer_spectra.enclosure import (TheoremConstants, Thm11Predicate, Window,
                                       region_components, region_scan)
from bilayer_spectra.potentials import GridSpec, build_potential

OUT = Path(__file__).parent / "out" / "figure_regions_py"

spec = {"kind": "gaussian", "width": 1.0,
        "normalize": {"functional": "lp", "p": 1.2, "value": 0.1 ** (1 / 1.2)}}
V = build_potential(spec, GridSpec(64, 8.0))
window = Window(-3.0, 3.0, -2.0, 2.0, 241, 161)

print("coupling  int|V|^p  admissible  lobes")
for t in (0.5, 1.0, 1.5, 2.0, 2.5):
    pred = Thm11Predicate.from_potential(V.scaled(t), 1.2, TheoremConstants())
    reg = region_scan(window, 1.0, pred)
    reg.write(OUT / f"t_{t:.2f}")
    print(f"{t:8.2f}  {pred.vp_integral:8.4f}  {reg.mask.mean():10.4f}  {region_components(reg):5d}")

# below t = 1 only the real-axis rays remain at this resolution; at t = 2.5 the
# two lobes merge into one region. Every mask is symmetric.
assert np.array_equal(reg.mask, reg.mask[:, ::-1]) and np.array_equal(reg.mask, reg.mask[::-1])
