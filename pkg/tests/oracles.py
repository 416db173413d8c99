"""Reference values frozen before the implementation was tested against them.

Each value was computed independently of homoglab with mpmath at 30
digits (Bessel functions, adaptive quadrature of the closed-form Poisson
integral, and the spherical Bessel plane-wave series), then rounded to
double precision.
"""

# u_eps(0) on the unit disk for g = Ex(y_2), eps = 1/40: J_0(80 pi)
DISK_CENTER_EPS_1_40 = 0.03557038763883854

# u_eps(0.3, 0.2) on the unit disk for g = Ex(y_2), eps = 1/10
DISK_POINT_EPS_1_10 = 0.06216395741364335 - 0.02240651261913395j

# u_eps(0.2, -0.1, 0.3) on the unit 3-ball for g = Ex(y_3), eps = 1/6
BALL_POINT_EPS_1_6 = 0.00021254748119024514 - 0.023841620071305834j

# sigma-hat of the unit circle at |xi| = 1.3 and 7.25: 2 pi J_0(2 pi |xi|)
CIRCLE_FOURIER = {1.3: 0.8192483300875421, 7.25: 0.5266487879525008}

# harmonic mean of 1 + 0.5 cos(2 pi t): sqrt(1 - 0.25)
HARMONIC_MEAN_HALF = 0.8660254037844386
