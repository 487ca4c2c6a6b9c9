"""Independent numerical oracles used by the test suite.

Everything here is deliberately naive and slow: dense eigensolves, shifted
inverse iteration, direct determinant sampling.  The production code must
agree with these, never the other way around.
"""
import numpy as np


def companion_eigs(a3, a2, a1, a0):
    """Quartic roots via a dense eigensolve of the companion matrix."""
    C = np.zeros((4, 4), dtype=complex)
    C[0, :] = [-a3, -a2, -a1, -a0]
    C[1, 0] = C[2, 1] = C[3, 2] = 1.0
    return np.linalg.eigvals(C)


def poly_from_roots(roots):
    """Monic quartic coefficients (a3, a2, a1, a0) from its four roots."""
    c = np.poly(np.asarray(roots, dtype=complex))
    return c[1], c[2], c[3], c[4]


def charpoly_by_sampling(M):
    """Coefficients of det(lambda I - M) from 5 determinant samples."""
    M = np.asarray(M, dtype=complex)
    # sample points away from the eigenvalues' typical scale
    pts = np.array([0.0, 1.3, -1.7, 2.9j, 1.1 - 2.3j], dtype=complex)
    vals = np.array([np.linalg.det(p * np.eye(4) - M) for p in pts])
    V = np.vander(pts, 5)  # columns p^4 ... p^0
    coef = np.linalg.solve(V, vals)
    coef = coef / coef[0]
    return coef[1], coef[2], coef[3], coef[4]


def inverse_iteration(M, shift, n_iter=50, seed=0):
    """Eigenpair of M nearest to shift by shifted inverse iteration."""
    M = np.asarray(M, dtype=complex)
    rng = np.random.default_rng(seed)
    n = M.shape[0]
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    A = M - shift * np.eye(n)
    lam = shift
    for _ in range(n_iter):
        try:
            w = np.linalg.solve(A, v)
        except np.linalg.LinAlgError:
            # shift is (numerically) exactly an eigenvalue; nudge it
            A = A + 1e-13 * np.eye(n)
            w = np.linalg.solve(A, v)
        v = w / np.linalg.norm(w)
        lam = v.conj() @ M @ v
    return lam, v


def rk4_transfer(eps_blocks, mu_blocks, thicknesses, omega, steps_per_layer):
    """Reference RK4 propagator written independently of the package.

    eps_blocks/mu_blocks are lists of 2x2 arrays, one per layer.  Uses the
    vector ODE on the four columns rather than a matrix step operator.
    """
    Qinv = np.array([[0.0, 1.0], [-1.0, 0.0]])
    T = np.eye(4, dtype=complex)
    for eps, mu, t in zip(eps_blocks, mu_blocks, thicknesses):
        G = np.zeros((4, 4), dtype=complex)
        G[:2, 2:] = 1j * omega * (Qinv @ mu)
        G[2:, :2] = -1j * omega * (Qinv @ eps)
        h = t / steps_per_layer
        for _ in range(steps_per_layer):
            k1 = G @ T
            k2 = G @ (T + 0.5 * h * k1)
            k3 = G @ (T + 0.5 * h * k2)
            k4 = G @ (T + h * k3)
            T = T + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return T


def match_multisets(X, Y):
    """Optimal max-distance matching by brute force (n <= 4)."""
    from itertools import permutations
    X = list(X)
    Y = list(Y)
    assert len(X) == len(Y)
    best = np.inf
    for perm in permutations(range(len(Y))):
        d = max(abs(x - Y[p]) for x, p in zip(X, perm))
        best = min(best, d)
    return best
