"""
Forward and reversed protocols
==============================

For each photon number n the weighted average P_n <exp(-beta W)>_n of the
forward protocol equals the probability P_R,n of the same photon number under
the time-reversed drive.  Summing over n gives Jarzynski's equality.  Breaking
detailed balance breaks the identity.
"""

from qjwork import DriveProtocol, ModelParams, reverse_identity_check
from qjwork.validation import broken_detailed_balance

protocol = DriveProtocol(0.05, 10)
params = ModelParams.from_detailed_balance(0.01, 2.0)

for label, p in (("detailed balance", params),
                 ("gamma_up x 1.5", broken_detailed_balance(params))):
    for n in (0, 1):
        lhs, rhs, diff = reverse_identity_check(p, protocol, n)
        print(f"{label:17} n={n}: {lhs:.10f} vs {rhs:.10f}  |diff| = {diff:.2e}")
