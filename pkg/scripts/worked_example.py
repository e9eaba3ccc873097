"""Exact and sampled constants of the six-dimensional worked system.

Index data, admissible r-windows, ladder start and envelope exponents come
out as Fractions; the growth conditions are checked on 10^4 samples.
"""
from fractions import Fraction

from orlicz_mpa.builtins import (WORKED_INDICES, WORKED_THETA, phi1_kernel, phi2_kernel,
                                 worked_nonlinearity)
from orlicz_mpa.moser import alpha_star, beta1, beta_window, envelope_exponents, limit_sums
from orlicz_mpa.nfunction import build_from_kernel, estimate_indices
from orlicz_mpa.nonlinearity import admissible_r_intervals, check_h2, check_hypotheses


def main():
    ip = WORKED_INDICES
    for name, kern in (("phi1", phi1_kernel()), ("phi2", phi2_kernel())):
        est = estimate_indices(build_from_kernel(kern), 6)
        print(f"{name}: estimated l={est.l:.9f} m={est.m:.9f}")
    print(f"declared l={ip.l} m={ip.m} N={ip.N}: l*={ip.l_star} m*={ip.m_star}")
    i1, i2 = admissible_r_intervals(ip, ip, *WORKED_THETA)
    print(f"admissible r1 {i1}, r2 {i2}")
    r = Fraction(7)
    print(f"beta1={beta1(ip, r)} alpha*={alpha_star(ip, r)} "
          f"window lower end {beta_window(ip, r, WORKED_THETA[0])}")
    u, v = envelope_exponents(ip, ip, Fraction(9), Fraction(9))
    fmt = lambda pairs: " | ".join(", ".join(str(e) for e in p) for p in pairs)
    print(f"lambda exponents of the u envelope: {fmt(u)}; v envelope: {fmt(v)}")
    for n in (10, 20, 40):
        s = limit_sums(ip, r, n)
        print(f"limit sums at depth {n}: " + ", ".join(f"{x:.3e}" for x in s))
    spec = worked_nonlinearity()
    rep = check_hypotheses(spec, ip, ip, 10_000, 4.0)
    for line in rep.lines():
        print(line)
    print(check_h2(spec, spec.mu).line())


if __name__ == "__main__":
    main()
