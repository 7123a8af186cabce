"""Symbolic oracle for the frozen pointwise values in test_graphgeom.py.

Everything is derived from the ambient metric with sympy: Christoffel symbols,
the covariant derivative of the tangent frame and the Riemann tensor of the
induced metric. None of the hand-written formulas of the package are used.

Run ``python tests/oracles/graph_oracle.py`` to regenerate the numbers.
"""

import sympy as sp

t, x, y = sp.symbols("t x y", real=True)


def christoffel(G, coords):
    Ginv = G.inv()
    n = len(coords)
    return [[[sp.simplify(sum(Ginv[a, d] * (sp.diff(G[d, b], coords[c]) + sp.diff(G[d, c], coords[b])
                                             - sp.diff(G[b, c], coords[d])) for d in range(n)) / 2)
              for c in range(n)] for b in range(n)] for a in range(n)]


def graph_quantities(f, fiber, u):
    """Return (H, K) of the graph t = u(x, y) in -dt^2 + f(t)^2 fiber."""
    amb = [t, x, y]
    G = sp.diag(-1, 0, 0)
    G[1:, 1:] = f**2 * fiber
    Gam = christoffel(G, amb)
    X = [u, x, y]
    on_graph = {t: u}
    tang = [[sp.diff(c, v) for c in X] for v in (x, y)]
    Gs = G.subs(on_graph)

    def dot(a, b):
        return sum(Gs[i, j] * a[i] * b[j] for i in range(3) for j in range(3))

    g = sp.Matrix(2, 2, lambda i, j: dot(tang[i], tang[j]))
    # Unit normal with <N, d/dt> > 0: solve N orthogonal to the tangents.
    n_low = sp.Matrix([[1, -sp.diff(u, x), -sp.diff(u, y)]])  # covector dt - du
    n_up = Gs.inv() * n_low.T
    norm2 = dot(list(n_up), list(n_up))
    N = [c / sp.sqrt(-norm2) for c in n_up]
    if sp.N(dot(N, [1, 0, 0]).subs({x: 0.3, y: 0.7})) < 0:
        N = [-c for c in N]

    def cov(i, j):
        second = [sp.diff(tang[j][a], (x, y)[i]) for a in range(3)]
        return [second[a] + sum(Gam[a][b][c].subs(on_graph) * tang[i][b] * tang[j][c]
                                for b in range(3) for c in range(3)) for a in range(3)]

    II = sp.Matrix(2, 2, lambda i, j: dot(N, cov(i, j)))
    H = -(g.inv() * II).trace() / 2
    gam = christoffel(g, [x, y])
    # R^0_{101} of the induced metric, K = g_{0a} R^a_{101} / det g.
    def R(a, b, c, d):
        return (sp.diff(gam[a][b][d], (x, y)[c]) - sp.diff(gam[a][b][c], (x, y)[d])
                + sum(gam[a][c][e] * gam[e][b][d] - gam[a][d][e] * gam[e][b][c] for e in range(2)))
    K = sum(g[0, a] * R(a, 1, 0, 1) for a in range(2)) / g.det()
    return H, K


def main():
    import math
    torus_u = sp.Rational(1, 5) * sp.sin(x) * sp.cos(y)
    H, K = graph_quantities(sp.exp(t), sp.eye(2), torus_u)
    fH, fK = sp.lambdify((x, y), H), sp.lambdify((x, y), K)
    print("torus exp, u = 0.2 sin x cos y")
    for i, j in [(5, 9), (20, 3), (40, 50)]:
        px, py = 2 * math.pi * i / 64, 2 * math.pi * j / 64
        print(f"  ({i}, {j}): H = {float(fH(px, py))!r}, K = {float(fK(px, py))!r}")
    # Sphere: x = theta, y = phi.
    sphere_u = 2 + sp.Rational(1, 10) * sp.cos(x) * sp.sin(x) * sp.cos(y)
    H, K = graph_quantities(t, sp.diag(1, sp.sin(x) ** 2), sphere_u)
    fH, fK = sp.lambdify((x, y), H), sp.lambdify((x, y), K)
    print("sphere powerlaw(1), u = 2 + 0.1 cos(theta) sin(theta) cos(phi), 128x256 nodes")
    for i, j in [(30, 17), (64, 100), (90, 201)]:
        th, ph = (i + 0.5) * math.pi / 128, 2 * math.pi * j / 256
        print(f"  ({i}, {j}): H = {float(fH(th, ph))!r}, K = {float(fK(th, ph))!r}")


if __name__ == "__main__":
    main()
