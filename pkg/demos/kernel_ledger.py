"""Kernel formulas checked against finite differences, then the sampled inequality ledger.

    python3 demos/kernel_ledger.py     # about a minute
"""
import math

from polydbar import load_chart, registered_bound, registered_bounds, verify_bound
from polydbar.kernels import derivative_gate

for name in ("disc", "cardioid"):
    gate = derivative_gate(load_chart(name), count=500)
    print(f"{name:<9} k vs FD {gate['k_rel_error']:.1e}   Bergman vs FD {gate['bergman_rel_error']:.1e}")

print()
print(f"{'bound':<14}{'constant':>10}{'trace change':>14}")
for name in registered_bounds():
    rep = verify_bound(registered_bound(name))
    extra = ""
    if rep.extremal_constant is not None:
        extra = f"   extremal {rep.extremal_constant:.9f} (2/pi = {2 / math.pi:.9f})"
    print(f"{name:<14}{rep.measured_constant:10.4f}{rep.trace_change:14.4f}{extra}")
