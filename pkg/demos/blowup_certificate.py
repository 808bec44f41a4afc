"""Log-space blow-up certificates.

For data A w with a nonnegative Fourier bump w, the recursive lower bounds
on the spectrum grow without limit once A clears a_min(delta, ||w_hat||_1).
The certifier evaluates the recursion in log space and checks the closed
form against the full table.
"""

import math

from cubicheat import RecursionParams, a_min, certify
from cubicheat.certifier import smallest_certified_N

delta = 0.1
threshold = a_min(delta, 1.0)
print(f"a_min(delta={delta}, ||w_hat||_1=1) = {threshold:.6f}")
for factor in (0.5, 1 - 1e-6, 1 + 1e-6, 2.0):
    cert = certify(RecursionParams(delta, factor * threshold, 0.0))
    print(f"  A = {factor:<10g} x a_min -> {cert.verdict:<13} margin {cert.margin:+.3e} decided by {cert.decided_by}")

info = smallest_certified_N(0.5)
log_n = info["log_N_min"]
print(f"\nthe oscillating datum is first certified to blow up at log N = {log_n:.6g}")
print(f"that is N = 10^{log_n / math.log(10):.6g}")
