"""Small dense complex linear algebra used throughout the package.

Closed-form quartic roots with a companion-matrix fallback, Faddeev-LeVerrier
characteristic polynomials, 4x4 eigenpair extraction, the permutation matching
distance on small multisets, and numerical nullspaces of 2xm systems.
"""
from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SizeMismatch

TOL_POLY = 1e-9
TOL_RESID = 1e-10

_ZETA3 = complex(-0.5, 0.86602540378443864676372317)  # exp(2*pi*i/3)


class QuarticCoeffs(NamedTuple):
    """Coefficients of a monic quartic  p(x) = x^4 + a3 x^3 + a2 x^2 + a1 x + a0."""

    a3: complex
    a2: complex
    a1: complex
    a0: complex


def companion_roots(a3: complex, a2: complex, a1: complex, a0: complex) -> np.ndarray:
    """Quartic roots as eigenvalues of the 4x4 companion matrix.

    This is the reference path: it is used as the fallback for degenerate
    resolvent roots in :func:`quartic_roots` and as the independent oracle
    in the test suite.
    """
    C = np.zeros((4, 4), dtype=complex)
    C[0, 0] = -a3
    C[0, 1] = -a2
    C[0, 2] = -a1
    C[0, 3] = -a0
    C[1, 0] = C[2, 1] = C[3, 2] = 1.0
    return np.linalg.eigvals(C)


_EPS = float(np.finfo(float).eps)


def _eval_with_noise_floor(r, a3, a2, a1, a0):
    f = (((r + a3) * r + a2) * r + a1) * r + a0
    ar = abs(r)
    tsum = (((ar + abs(a3)) * ar + abs(a2)) * ar + abs(a1)) * ar + abs(a0)
    return f, 4.0 * _EPS * tsum


def _polish_quartic_root(r, a3, a2, a1, a0):
    # Multiplicity-robust Newton (analytic derivatives); at most 3 steps.
    # Stops once |P(r)| sinks below its own evaluation noise: stepping on a
    # noise-dominated residual turns multiple-root refinement into a random
    # walk of size comparable to the root blur itself.
    for _ in range(3):
        f, floor = _eval_with_noise_floor(r, a3, a2, a1, a0)
        if abs(f) <= floor:
            return r
        fp = ((4.0 * r + 3.0 * a3) * r + 2.0 * a2) * r + a1
        fpp = (12.0 * r + 6.0 * a3) * r + 2.0 * a2
        denom = fp * fp - f * fpp
        if denom != 0:
            step = f * fp / denom
        elif fp != 0:
            step = f / fp
        else:
            return r
        if abs(step) > 0.5 * (1.0 + abs(r)):
            return r
        r = r - step
        if abs(step) <= 1e-16 * (1.0 + abs(r)):
            break
    return r


def _ferrari(a3, a2, a1, a0):
    """Closed-form depressed-quartic factorization; None if the resolvent
    root is too small to divide by safely (caller falls back to companion)."""
    b2 = a2 - 0.375 * a3 * a3
    b1 = a1 - 0.5 * a2 * a3 + 0.125 * a3 ** 3
    b0 = a0 - 0.25 * a1 * a3 + 0.0625 * a2 * a3 * a3 - (3.0 / 256.0) * a3 ** 4
    # Resolvent cubic w^3 + 2 b2 w^2 + (b2^2 - 4 b0) w - b1^2 = 0, solved via
    # the quartic discriminants (principal square/cube roots throughout).
    d0 = a2 * a2 - 3.0 * a1 * a3 + 12.0 * a0
    d1 = (2.0 * a2 ** 3 - 9.0 * a1 * a2 * a3 + 27.0 * a0 * a3 * a3
          + 27.0 * a1 * a1 - 72.0 * a0 * a2)
    inner = d1 * d1 - 4.0 * d0 ** 3
    v3 = 0.5 * (-d1 + cmath.sqrt(inner))
    if v3 == 0:
        v3 = 0.5 * (-d1 - cmath.sqrt(inner))
    candidates = []
    if v3 == 0:
        candidates.append(-2.0 * b2 / 3.0)
    else:
        v = cmath.exp(cmath.log(v3) / 3.0)
        for k in range(3):
            vk = v * _ZETA3 ** k
            candidates.append(-(2.0 * b2 + vk + d0 / vk) / 3.0)
    # Largest-modulus resolvent root keeps the division by sqrt(w) stable.
    w = max(candidates, key=abs)
    if abs(w) < 1e-10 * (1.0 + abs(b2) + abs(b1) + abs(b0)):
        return None
    sq = cmath.sqrt(w)
    c1 = 0.5 * (b2 + w) - 0.5 * b1 / sq
    c2 = 0.5 * (b2 + w) + 0.5 * b1 / sq
    # c1*c2 = b0 exactly; recomputing the smaller one from that identity
    # removes the cancellation that otherwise wrecks the small roots when
    # the coefficients are large (e.g. strongly evanescent monodromies)
    if abs(c1) > abs(c2) and c1 != 0:
        c2 = b0 / c1
    elif abs(c2) > abs(c1) and c2 != 0:
        c1 = b0 / c2
    roots = []
    for s, c in ((sq, c1), (-sq, c2)):
        # z^2 + s z + c = 0 with the cancellation-free branch first
        disc = cmath.sqrt(s * s - 4.0 * c)
        if abs(-s + disc) >= abs(-s - disc):
            z1 = 0.5 * (-s + disc)
        else:
            z1 = 0.5 * (-s - disc)
        z2 = c / z1 if z1 != 0 else -z1 - s
        roots.append(z1 - 0.25 * a3)
        roots.append(z2 - 0.25 * a3)
    return roots


def _derivatives_with_scales(r, a3, a2, a1, a0):
    # values of P, P', P'', P''' at r, each paired with the magnitude sum of
    # its own terms (the natural backward-error scale at r)
    ar = abs(r)
    p0 = (((r + a3) * r + a2) * r + a1) * r + a0
    t0 = (((ar + abs(a3)) * ar + abs(a2)) * ar + abs(a1)) * ar + abs(a0)
    p1 = ((4.0 * r + 3.0 * a3) * r + 2.0 * a2) * r + a1
    t1 = ((4.0 * ar + 3.0 * abs(a3)) * ar + 2.0 * abs(a2)) * ar + abs(a1)
    p2 = (12.0 * r + 6.0 * a3) * r + 2.0 * a2
    t2 = (12.0 * ar + 6.0 * abs(a3)) * ar + 2.0 * abs(a2)
    p3 = 24.0 * r + 6.0 * a3
    t3 = 24.0 * ar + 6.0 * abs(a3)
    return (p0, p1, p2, p3), (t0, t1, t2, t3)


_SHARPEN_FLOOR = 512.0  # noise-floor multiple the merge gates tolerate


def _refine_critical(z, m, a3, a2, a1, a0):
    """Newton on P^(m-1) starting at z: an m-fold root of P is a simple root
    of P^(m-1), so this converges quadratically even when P itself is blurred
    to eps^(1/m) around the cluster.  Returns None when the iteration has no
    stable nearby target (the caller then keeps the group unmerged)."""
    for _ in range(8):
        derivs, scales = _derivatives_with_scales(z, a3, a2, a1, a0)
        g = derivs[m - 1]
        if abs(g) <= 4.0 * _EPS * scales[m - 1]:
            return z
        gp = 24.0 if m == 4 else derivs[m]
        if gp == 0:
            return None
        step = g / gp
        if abs(step) > 0.5 * (1.0 + abs(z)):
            return None
        z = z - step
    return z


def _sharpen_multiple_roots(roots, a3, a2, a1, a0):
    """Collapse near-multiple root groups onto the critical point of P^(m-1).

    An m-fold root perturbed by coefficient noise eta splits into m points
    spread over a radius eta^(1/m), and the closed form smears each of them
    further, so per-root polish cannot do better than that conditioning
    limit.  The nearby simple root of P^(m-1) is immune: Newton refines it to
    machine precision, and for a genuine m-fold root all lower derivatives
    sink to their evaluation noise floors there.  A group is merged only when
    that happens; a cluster of merely close roots leaves P (or an
    intermediate derivative) orders of magnitude above its floor at the
    critical point and is kept split.  Grouping radii are local to each
    root's magnitude so mixed-scale root sets (strong evanescence) are never
    over-merged.
    """
    n = len(roots)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            radius = 1e-3 * (1.0 + min(abs(roots[i]), abs(roots[j])))
            if abs(roots[i] - roots[j]) <= radius:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    for group in groups.values():
        m = len(group)
        if m < 2:
            continue
        members = [roots[i] for i in group]
        centroid = sum(members) / m
        diam = max(abs(x - y) for x in members for y in members)
        pol = _refine_critical(centroid, m, a3, a2, a1, a0)
        if pol is None:
            continue
        if abs(pol - centroid) > 4.0 * diam + 1e-6 * (1.0 + abs(centroid)):
            continue
        derivs, scales = _derivatives_with_scales(pol, a3, a2, a1, a0)
        if any(abs(derivs[j]) > _SHARPEN_FLOOR * _EPS * scales[j]
               for j in range(m)):
            continue
        for i in group:
            roots[i] = pol
    return roots


def quartic_roots(a3: complex, a2: complex, a1: complex, a0: complex) -> np.ndarray:
    """All four roots (with multiplicity) of x^4 + a3 x^3 + a2 x^2 + a1 x + a0.

    Closed form with deterministic principal branches, polished by a few
    multiplicity-robust Newton steps; falls back to the companion-matrix
    eigenvalues when the resolvent root degenerates or the residual check
    fails.  Near-multiple roots are collapsed onto their polished mean.
    Total for finite inputs.
    """
    a3, a2, a1, a0 = complex(a3), complex(a2), complex(a1), complex(a0)
    roots = _ferrari(a3, a2, a1, a0)
    if roots is None:
        roots = list(companion_roots(a3, a2, a1, a0))
    roots = [_polish_quartic_root(r, a3, a2, a1, a0) for r in roots]
    # fall back when any residual exceeds its per-root backward-error scale
    if any(abs(f) > TOL_POLY * floor / (4.0 * _EPS)
           for f, floor in (_eval_with_noise_floor(r, a3, a2, a1, a0)
                            for r in roots)):
        roots = [_polish_quartic_root(r, a3, a2, a1, a0)
                 for r in companion_roots(a3, a2, a1, a0)]
    roots = _sharpen_multiple_roots(roots, a3, a2, a1, a0)
    return np.array(roots, dtype=complex)


def char_poly4(M: np.ndarray) -> QuarticCoeffs:
    """Coefficients of det(lambda*I - M) for a 4x4 M via Faddeev-LeVerrier.

    a0 equals det(M) by construction; a3 equals -tr(M).
    """
    M = np.asarray(M, dtype=complex)
    I4 = np.eye(4, dtype=complex)
    c3 = -np.trace(M)
    M2 = M @ (M + c3 * I4)
    c2 = -0.5 * np.trace(M2)
    M3 = M @ (M2 + c2 * I4)
    c1 = -np.trace(M3) / 3.0
    M4 = M @ (M3 + c1 * I4)
    c0 = -0.25 * np.trace(M4)
    return QuarticCoeffs(complex(c3), complex(c2), complex(c1), complex(c0))


@dataclass
class EigenSet:
    """Eigenvalues and unit eigenvectors of a 4x4 matrix.

    ``vectors[:, j]`` pairs with ``lambdas[vector_index[j]]``.  Eigenvalues
    within the clustering radius of each other are averaged to their cluster
    mean (restores accuracy for non-defective multiple eigenvalues) and
    flagged in ``degenerate``.  ``defective`` is set when a cluster's
    geometric multiplicity is smaller than its algebraic multiplicity, in
    which case fewer than four vectors are returned.
    """

    lambdas: np.ndarray
    vectors: np.ndarray
    vector_index: np.ndarray
    degenerate: np.ndarray
    defective: bool

    def pairs(self):
        """Yield (lambda, vector) for every extracted eigenvector."""
        for j in range(self.vectors.shape[1]):
            yield self.lambdas[self.vector_index[j]], self.vectors[:, j]


def _cluster_indices(lambdas, radius):
    n = len(lambdas)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(lambdas[i] - lambdas[j]) <= radius:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: (lambdas[g[0]].real, lambdas[g[0]].imag))


def eigen4(M: np.ndarray, tol_cluster: float | None = None,
           tol_resid: float = TOL_RESID) -> EigenSet:
    """Eigenpairs of a 4x4 complex matrix.

    Eigenvalues come from the characteristic quartic; eigenvectors are the
    smallest singular directions of (M - lambda I), one batch per eigenvalue
    cluster.  Residuals are checked against ``tol_resid * ||M||_F``; vectors
    failing it (defective clusters) are dropped and the set is flagged.
    """
    M = np.asarray(M, dtype=complex)
    lambdas = quartic_roots(*char_poly4(M))
    if tol_cluster is None:
        tol_cluster = 1e-8 * (1.0 + max(abs(l) for l in lambdas))
    norm = np.linalg.norm(M)
    clusters = _cluster_indices(lambdas, tol_cluster)
    degenerate = np.zeros(4, dtype=bool)
    cols, col_idx = [], []
    defective = False
    for cluster in clusters:
        mult = len(cluster)
        lam = lambdas[cluster].mean()
        if mult > 1:
            lambdas[cluster] = lam
            degenerate[cluster] = True
        _, _, vh = np.linalg.svd(M - lam * np.eye(4))
        taken = 0
        for j in range(3, 3 - mult, -1):
            v = vh[j].conj()
            if np.linalg.norm(M @ v - lam * v) <= max(tol_resid * max(norm, 1.0), 1e-13):
                cols.append(v)
                col_idx.append(cluster[taken])
                taken += 1
        if taken < mult:
            defective = True
    vectors = np.column_stack(cols) if cols else np.zeros((4, 0), dtype=complex)
    return EigenSet(lambdas=lambdas, vectors=vectors,
                    vector_index=np.array(col_idx, dtype=int),
                    degenerate=degenerate, defective=defective)


def matching_distance(X, Y) -> float:
    """min over permutations pi of max_i |x_i - y_pi(i)| (exact, exhaustive).

    Intended for multisets of size <= 4 (eigenvalue comparisons), where the
    24-permutation search is trivially cheap.
    """
    xs = [complex(x) for x in X]
    ys = [complex(y) for y in Y]
    if len(xs) != len(ys):
        raise SizeMismatch(f"multiset sizes differ: {len(xs)} vs {len(ys)}")
    if not xs:
        return 0.0
    best = None
    for perm in itertools.permutations(range(len(ys))):
        d = max(abs(x - ys[j]) for x, j in zip(xs, perm))
        if best is None or d < best:
            best = d
    return best


def nullspace2xm(B: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal numerical nullspace basis (columns) of a 2xm matrix.

    Right singular directions with singular value <= tol * sigma_max; for a
    2xm matrix the result always has at least m - 2 columns.
    """
    B = np.asarray(B, dtype=complex)
    m = B.shape[1]
    _, s, vh = np.linalg.svd(B, full_matrices=True)
    smax = s[0] if len(s) else 0.0
    cols = [vh[j].conj() for j in range(len(s)) if s[j] <= tol * smax or smax == 0.0]
    cols.extend(vh[j].conj() for j in range(len(s), m))
    if not cols:
        return np.zeros((m, 0), dtype=complex)
    return np.column_stack(cols)
