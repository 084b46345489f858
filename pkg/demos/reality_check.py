"""Spectrum of D_0 + i W^2 on both sides of the coupling threshold int tr|V| = 4.

Below the threshold every eigenvalue stays within the noise band of the real
axis. Above it the flagged values include band eigenvalues shifted by the
potential on the finite torus, and their count grows with the coupling.
"""

from bilayer_spectra.harness import corollary32_suite

seeds = range(6)
for coupling in (2.0, 3.6, 12.0, 40.0):
    rep = corollary32_suite(seeds, coupling)
    print(f"int tr|V| = {coupling:5.1f}  outliers per seed {rep.outliers}  "
          f"max |Im k| = {max(rep.max_abs_im):.4f}  threshold = {rep.threshold:.4f}")
