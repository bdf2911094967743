"""Physical constants used across the toolkit."""

# Exact SI speed of light; used for wavelengths, wavenumbers and loss models.
C0 = 299_792_458.0  # m/s

# Rounded free-space speed used by the closed-form synthesis rules so that
# hand-tabulated design values reproduce exactly.
C_DESIGN = 3.0e8  # m/s

MU0 = 1.25663706212e-6  # H/m
EPS0 = 8.8541878128e-12  # F/m
ETA0 = 376.730313668  # ohm, free-space wave impedance
