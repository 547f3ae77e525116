"""Pure-Python inner loop of the time-domain solver.

One step of the split scheme, for each photon sample crossing the coupling
point:

1. half-step exact exponential ``eh`` of the local (cavity, atom) block;
2. waveguide kick, trapezoidal in the cavity amplitude::

       ec' = kick_a * ec + kick_b * (in_r + in_l)
       out = in + jump * (ec + ec') / 2

   which conserves photon + cavity probability exactly and is its own inverse
   under ``dt -> -dt``;
3. second half-step ``eh``.

The midpoint amplitudes are returned for the dissipation audit.
"""
import numpy as np


def propagate(in_r, in_l, eh, kick_a, kick_b, jump, ec0, ea0):
    n = len(in_r)
    out_r = np.empty(n, dtype=complex)
    out_l = np.empty(n, dtype=complex)
    ec_mid = np.empty(n, dtype=complex)
    ea_mid = np.empty(n, dtype=complex)
    ec_end = np.empty(n, dtype=complex)
    ea_end = np.empty(n, dtype=complex)
    e00, e01, e10, e11 = (complex(v) for v in np.asarray(eh).ravel())
    in_r = in_r.tolist()
    in_l = in_l.tolist()
    ec, ea = complex(ec0), complex(ea0)
    for k in range(n):
        ec, ea = e00 * ec + e01 * ea, e10 * ec + e11 * ea
        ir, il = in_r[k], in_l[k]
        ec_new = kick_a * ec + kick_b * (ir + il)
        m = 0.5 * (ec + ec_new)
        out_r[k] = ir + jump * m
        out_l[k] = il + jump * m
        ec_mid[k] = m
        ea_mid[k] = ea
        ec = ec_new
        ec, ea = e00 * ec + e01 * ea, e10 * ec + e11 * ea
        ec_end[k] = ec
        ea_end[k] = ea
    return out_r, out_l, ec_mid, ea_mid, ec_end, ea_end
