"""Independent high-precision oracle for the default monatomic + radiation gas.

Evaluates p, e, s directly from the structural function and takes partial
derivatives by central finite differences (h = 1e-6) in mpmath, so that the
frozen values in the C++ tests never depend on the analytic partials that the
library implements.
"""
import mpmath as mp

mp.mp.dps = 50
PINF = mp.mpf(1)
A_RAD = mp.mpf(1)


def P(z):
    return z * mp.e ** (-z) + PINF * z ** (mp.mpf(5) / 3)


def S_closed(z):
    return mp.mpf(3) / 2 * mp.e ** (-z) + mp.e1(z)


def S_quad(z):
    def dS(t):
        dP = mp.e ** (-t) * (1 - t) + mp.mpf(5) / 3 * PINF * t ** (mp.mpf(2) / 3)
        return -mp.mpf(3) / 2 * (mp.mpf(5) / 3 * P(t) - dP * t) / t ** 2
    return -mp.quad(dS, [z, 10 * z, 100 * z, mp.inf])


def p(r, th):
    return th ** mp.mpf(2.5) * P(r / th ** mp.mpf(1.5)) + A_RAD / 3 * th ** 4


def e(r, th):
    return mp.mpf(1.5) * th ** mp.mpf(2.5) / r * P(r / th ** mp.mpf(1.5)) + A_RAD / r * th ** 4


def s(r, th):
    return S_closed(r / th ** mp.mpf(1.5)) + 4 * A_RAD / 3 * th ** 3 / r


def fd(f, x, h=mp.mpf("1e-6")):
    return (f(x + h) - f(x - h)) / (2 * h)


def coefficients(rb, tb):
    p_r = fd(lambda r: p(r, tb), rb)
    p_t = fd(lambda t: p(rb, t), tb)
    e_t = fd(lambda t: e(rb, t), tb)
    s_t = fd(lambda t: s(rb, t), tb)
    alpha = p_t / p_r / rb
    cp = e_t + tb * alpha * p_t / rb
    lam = tb * alpha * p_t / (rb * cp)
    A = p_t / s_t / rb
    omega = p_r + p_t ** 2 / (rb ** 2 * s_t)
    return dict(p_r=p_r, p_t=p_t, e_t=e_t, s_t=s_t, alpha=alpha, c_p=cp,
                lam=lam, A=A, omega=omega, k=lam / (1 - lam),
                s_r=fd(lambda r: s(r, tb), rb))


if __name__ == "__main__":
    one = mp.mpf(1)
    print("p(1,1)", p(one, one))
    print("p(0,1) a=3", 3 / mp.mpf(3))
    print("e(1,1)", e(one, one))
    print("S(1) closed", S_closed(one), "quad", S_quad(one))
    print("s(1,1)", s(one, one))
    print("S(50)", S_closed(mp.mpf(50)))
    print("P/Z^5/3 at 1e3,1e4", P(mp.mpf(1e3)) / mp.mpf(1e3) ** (mp.mpf(5) / 3),
          P(mp.mpf(1e4)) / mp.mpf(1e4) ** (mp.mpf(5) / 3))
    print("p/theta^4 at theta=1e3", p(one, mp.mpf(1e3)) / mp.mpf(1e3) ** 4)
    for k, v in coefficients(one, one).items():
        print(k, mp.nstr(v, 15))
