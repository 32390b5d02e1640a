"""High-precision scalar values frozen into the model unit tests.

Evaluates the transmission and threshold formulas directly with 50-digit
arithmetic using the 10 um mean parameter set.
"""
from mpmath import mp, mpf, sinh, exp

mp.dps = 50

g_max_p, b_max_p = mpf("4.34e-4"), mpf("4.99")
g_max_n, b_max_n = mpf("8.00e-6"), mpf("6.27")
g_min_p, b_min_p = mpf("3.14e-2"), mpf("2.13e-3")
g_min_n, b_min_n = mpf("1.50e-5"), mpf("3.30")
a_p, a_n = mpf("7.10e-2"), mpf("2.66e-2")

print("h1(+1) ", g_max_p * sinh(b_max_p * 1))
print("h1(-1) ", g_max_n * (1 - exp(-b_max_n * -1)))
print("h2(+1) ", g_min_p * (1 - exp(-b_min_p * 1)))
print("h2(-2) ", g_min_n * sinh(b_min_n * -2))
print("g(0.5) ", a_p * (exp(mpf("0.5")) - exp(0)))
print("g(-1)  ", -a_n * (exp(1) - exp(0)))
print("sinh(1)", sinh(1))
