"""
Choosing the sampling fraction
===============================

The double bootstrap splits the graph into two halves, treats one half's
interval as the target and measures how often intervals from the other half
cover it.  The fraction whose coverage is closest to the nominal level wins;
ties go to the smallest fraction.
"""

from __future__ import annotations

from netboot import SbmParams, choose_q, generate_sbm

params = SbmParams(sizes=(100, 100, 100), rho=0.1, t=5)
g = generate_sbm(params, seed=3)

for scheme in ("node", "row"):
    sel = choose_q(g, "triangle_density", scheme, [0.1, 0.2, 0.4, 0.6, 0.8], B=20, B_inner=40, seed=0)
    print(f"{scheme}: chosen q={sel.chosen}")
    for q, cov, w in zip(sel.candidates, sel.coverages, sel.mean_widths):
        print(f"   q={q:.1f}  coverage={cov:.2f}  mean width={w:.4f}")
