"""Unit conversions. PSD parameters stay in cm^-3 and micrometres; the optics
integrals convert to SI exactly once through ``COEFF_UM2_PER_CM3_TO_PER_M``.
"""

UM = 1e-6  # metres per micrometre
PER_CM3_TO_PER_M3 = 1e6

# (pi/8) * integral of D^2 [um^2] * N(D) [cm^-3 um^-1] dD [um]  ->  m^-1
COEFF_UM2_PER_CM3_TO_PER_M = UM * UM * PER_CM3_TO_PER_M3

SPEED_OF_LIGHT = 299_792_458.0  # m/s
