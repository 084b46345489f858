"""Hankel, Macdonald and G at a few complex arguments, with the identities they satisfy."""

import numpy as np

from bilayer_spectra.specfun import bessel_j, bessel_y, g_arrays, hankel1, macdonald_k0

for z in (0.7 + 0.3j, 3.0 + 1.0j, 20.0 + 5.0j):
    w = -bessel_j(0, z) * bessel_y(1, z) + bessel_j(1, z) * bessel_y(0, z)
    conn = macdonald_k0(z) - 0.5j * np.pi * hankel1(0, 1j * z)
    print(f"z = {z}:  H0 = {hankel1(0, z):.6e}  K0 = {macdonald_k0(z):.6e}")
    print(f"   Wronskian error {abs(w - 2 / (np.pi * z)):.1e}  connection error {abs(conn):.1e}")

r = np.geomspace(1e-8, 1e2, 6)
g, _, _ = g_arrays(r * np.exp(0.25j * np.pi))
for ri, gi in zip(r, g):
    print(f"|z| = {ri:8.1e}  G = {gi:.10f}")
