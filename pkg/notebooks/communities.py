"""
How many communities?
=====================

Count communities with the Bethe-Hessian estimate on induced subgraphs and
with edge cross-validation on pair subsamples, then look at the spread of
the estimates across replicates.
"""

from __future__ import annotations

import numpy as np

from netboot import BetheHessianK, EcvAucK, SbmParams, bethe_hessian_k, bootstrap_ci, generate_sbm

g = generate_sbm(SbmParams(sizes=(150, 150, 150), rho=0.1, t=10), seed=11)
print("full-graph Bethe-Hessian estimate:", bethe_hessian_k(g).k_hat)

bh = bootstrap_ci(g, BetheHessianK(), "node", 0.5, B=30, seed=1)
print("node q=0.5 estimates:", np.bincount(bh.replicates.astype(int)))

ecv = bootstrap_ci(g, EcvAucK(k_max=5), "pair", 0.8, B=10, seed=1)
print("pair q=0.8 ECV estimates:", ecv.replicates.astype(int).tolist())
