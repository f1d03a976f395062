"""Reference values frozen into the C++ tests.

Everything here is computed independently of the library: closed forms with
mpmath at 30 digits, or plain numpy linear algebra. Run it and compare with
the constants in the test sources when a reference needs to change.
"""
import mpmath as mp
import numpy as np

mp.mp.dps = 30


def heisenberg_distance(x, y, z):
    """CC distance from the identity to (x, y, z) on H^1 with z carrying the
    1/2 (x dy - y dx) area term. Geodesics project to circular arcs: an arc of
    length L turning through angle t has chord 2 L sin(t/2) / t and encloses
    area L^2 (t - sin t) / (2 t^2)."""
    r = mp.sqrt(mp.mpf(x) ** 2 + mp.mpf(y) ** 2)
    z = abs(mp.mpf(z))
    if z == 0:
        return r
    if r == 0:
        return mp.sqrt(4 * mp.pi * z)
    ratio = z / r ** 2
    g = lambda t: (t - mp.sin(t)) / (8 * mp.sin(t / 2) ** 2) - ratio
    t = mp.findroot(g, (mp.mpf("1e-12"), 2 * mp.pi - mp.mpf("1e-12")), solver="bisect")
    return r * t / (2 * mp.sin(t / 2))


def heisenberg_mul(p, q):
    return (p[0] + q[0], p[1] + q[1], p[2] + q[2] + mp.mpf(1) / 2 * (p[0] * q[1] - p[1] * q[0]))


def laminate_F(A, lam):
    a = lambda s: 1 + A * mp.sin(2 * mp.pi * s)
    return mp.quad(lambda s: mp.sqrt(a(s) ** 2 - lam ** 2), [0, 0.25, 0.75, 1])


def laminate_hom(A, v1, vp):
    amin = 1 - A
    f = lambda lam: -(abs(v1) * laminate_F(A, lam) + lam * abs(vp))
    best = min((f(mp.mpf(k) / 200 * amin), mp.mpf(k) / 200 * amin) for k in range(201))
    lo = max(mp.mpf(0), best[1] - amin / 200)
    hi = min(amin, best[1] + amin / 200)
    # golden section on the bracketing cell
    gr = (mp.sqrt(5) - 1) / 2
    c, d = hi - gr * (hi - lo), lo + gr * (hi - lo)
    for _ in range(200):
        if f(c) < f(d):
            hi = d
        else:
            lo = c
        c, d = hi - gr * (hi - lo), lo + gr * (hi - lo)
    return -f((lo + hi) / 2)


def show(label, v):
    print(f"{label} = {mp.nstr(v, 17)}")


if __name__ == "__main__":
    print("# Heisenberg CC distances from the identity")
    for p in [(0, 0, 1), (0.5, -0.5, 0.25), (1, 0, 0), (0.3, 0.4, 0.1), (0, 0, 0.25), (0.2, 0, 0.3)]:
        show(f"d_cc{p}", heisenberg_distance(*p))
    print("# (x^-1 y) for the dist config's third pair")
    x = (mp.mpf("0.2"), mp.mpf("0.1"), mp.mpf(0))
    y = (mp.mpf("-0.3"), mp.mpf("0.4"), mp.mpf("0.5"))
    rel = heisenberg_mul((-x[0], -x[1], -x[2]), y)
    show("d_cc(x,y)", heisenberg_distance(*rel))
    print("# hand products")
    print("(1,0,0)*(0,1,0) =", heisenberg_mul((1, 0, 0), (0, 1, 0)))
    print("(1,2,3)*(4,5,6) =", heisenberg_mul((1, 2, 3), (4, 5, 6)))
    print("# laminate cell, amplitude 0.5")
    for lam in [0, 0.25, 0.5]:
        show(f"F({lam})", laminate_F(mp.mpf("0.5"), mp.mpf(lam)))
    for v in [(1, 0), (0, 1), (0.6, 0.8), (0.5, -0.3)]:
        show(f"phi_hom{v}", laminate_hom(mp.mpf("0.5"), mp.mpf(v[0]), mp.mpf(v[1])))
    print("# elliptic dual, A = [[2, 0.5], [0.5, 1]]")
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    for v in [(1.0, 0.0), (0.3, -0.7)]:
        v = np.array(v)
        print(f"phi{tuple(v)} = {np.sqrt(v @ A @ v)!r}  phi_star = {np.sqrt(v @ np.linalg.solve(A, v))!r}")
