"""When can a time attribution and a frequency attribution describe the same signal?

A signal and its unitary DFT cannot both be concentrated on few entries.  The
detector turns that bound into a test on a pair of attribution vectors: if
both are too concentrated, they cannot come from one and the same underlying
feature.
"""

import numpy as np

from upcheck import AttributionPair, detect_violation, dft
from upcheck.spectral import tone

n = 64

# A spike and its spectrum: perfectly flat, so no violation.
spike = np.zeros(n)
spike[10] = 1.0
r = detect_violation(AttributionPair(spike, np.abs(dft(spike))))
print("spike vs its own spectrum:  violated =", r.violated)

# A pure tone: spread out in time, two bins in frequency.  Still consistent.
x = tone(n, 5)
r = detect_violation(AttributionPair(np.abs(x), np.abs(dft(x))))
print("tone vs its own spectrum:   violated =", r.violated)

# A spike in time paired with a single bin in frequency is impossible for any
# real signal, so the detector produces a witness.
one_bin = np.zeros(n // 2 + 1)
one_bin[5] = 1.0
r = detect_violation(AttributionPair(spike, one_bin))
w = r.witness
print(f"spike vs one bin:           violated = {r.violated}; "
      f"N_t*N_f = {w.lhs} < N(1-eps_t-eps_f)^2 = {w.rhs:g}")

# Noise blurs concentration; the detector tolerates some leakage.
rng = np.random.default_rng(0)
for level in (0.01, 0.1, 0.3):
    t = spike + level * rng.random(n)
    f = one_bin + level * rng.random(n // 2 + 1)
    strongest = detect_violation(AttributionPair(t, f), mode="strongest")
    ratio = strongest.witness.lhs / strongest.witness.rhs if strongest.violated else float("nan")
    print(f"  leakage {level:4.2f}: violated = {strongest.violated!s:5}  best lhs/rhs = {ratio:.3f}")
