"""Reference values computed independently of the package and frozen here.

Closed forms are evaluated by hand; the refined minima come from a 50-digit
sympy polynomial root solve of d|t|^2/d omega = 0 with the rational parameter values.
"""
import math

# lossless, in tune, g = 0.5, Gamma = 0.09
E_A_AT_RESONANCE = -0.6                       # -V/g with V = 0.3
E_AT_RABI_DIP = -1j / 0.3                     # v_g / (i V)

# single dissipation channel
T_DIP_CAVITY_LOSS = 0.05 / 0.14               # gamma_c / (gamma_c + Gamma)
T_CENTRE_ATOM_LOSS = 0.25 / 0.2545            # g^2 / (g^2 + Gamma gamma_a)
PHASE_AT_UPPER_DIP = math.atan(0.1)           # atan(gamma_a / g)

# refined upper minima, |t|^2 with g = 0.5, Gamma = 0.09
MIN_UPPER_ATOM_005 = 1.4993384640507650      # gamma_a = 0.05
MIN_UPPER_ATOM_002 = 1.4999382992636794      # gamma_a = 0.02
MIN_UPPER_BOTH_005 = 1.5007613402024768      # gamma_c = gamma_a = 0.05

# switch, g = 0.03, Gamma = 0.09, atom at 3: T_off = g^4 / (g^4 + (delta Gamma)^2)
T_OFF_SWITCH = 0.03 ** 4 / (0.03 ** 4 + (2 * 0.09) ** 2)


def flat_band_lamb_shift(gamma, lo, hi, omega):
    """Principal value of (gamma/pi) * int_lo^hi dw / (omega - w)."""
    return gamma / math.pi * math.log((omega - lo) / (hi - omega))


def finite_band_pole_rate(gamma, half_span):
    """Fixed point of y = gamma (1 + (2/pi) atan(y / half_span))."""
    y = gamma
    for _ in range(200):
        y = gamma * (1 + 2 / math.pi * math.atan(y / half_span))
    return y
