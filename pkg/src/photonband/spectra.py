"""Complex band structure of 1D layered cells.

Roots of the dispersion relation det(M(omega) - e^{ik} I) = 0 are located by
argument-principle rectangle subdivision and polished by Newton steps, then
continued over the Brillouin zone by a secant predictor / Newton corrector
with adaptive step halving.  All-isotropic cells route through the decoupled
2x2 block's relation tr(M_s(omega)) = 2 cos k, whose roots are simple where
the 4x4 determinant's are all double.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import transfer
from .errors import (BandCollision, BoundaryTooClose, ContinuationStall,
                     MaxDepthExceeded, TooManyRoots)
from .media import UnitCell

TOL_CLOSE = 1e-7
TOL_BND = 1e-9
NEWTON_TARGET = 1e-10
STEP_BOUND = 0.25
MIN_KSTEP = 1e-5
COLLISION_TOL = 1e-6

_EPS = float(np.finfo(float).eps)


class Rectangle(NamedTuple):
    """Axis-aligned closed rectangle in the complex omega plane."""

    re0: float
    re1: float
    im0: float
    im1: float

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))

    @property
    def width(self) -> float:
        return self.re1 - self.re0

    @property
    def height(self) -> float:
        return self.im1 - self.im0

    @property
    def diag(self) -> float:
        return math.hypot(self.width, self.height)

    def contains(self, w: complex, margin: float = 0.0) -> bool:
        return (self.re0 - margin <= w.real <= self.re1 + margin
                and self.im0 - margin <= w.imag <= self.im1 + margin)

    def inflated(self, factor: float) -> "Rectangle":
        c = self.center
        hw = 0.5 * self.width * factor
        hh = 0.5 * self.height * factor
        return Rectangle(c.real - hw, c.real + hw, c.imag - hh, c.imag + hh)

    def corners(self) -> list[complex]:
        return [complex(self.re0, self.im0), complex(self.re1, self.im0),
                complex(self.re1, self.im1), complex(self.re0, self.im1)]


@dataclass(frozen=True)
class DispersionCurve:
    """One band omega_n(k) sampled over the Brillouin zone.

    ``samples`` is ordered in k; ``closed`` records whether the two zone-edge
    values agree within the closure tolerance (they must, for a band function
    on the circle, unless the trace was cut short).
    """

    band_index: int
    samples: tuple
    closed: bool

    def ks(self) -> np.ndarray:
        return np.array([k for k, _ in self.samples], dtype=float)

    def omegas(self) -> np.ndarray:
        return np.array([w for _, w in self.samples], dtype=complex)

    def omega_at(self, k: float) -> Optional[complex]:
        """Sampled value at k (12-decimal key match), None when absent."""
        key = round(float(k), 12)
        for kk, w in self.samples:
            if round(kk, 12) == key:
                return w
        return None


@dataclass(frozen=True)
class BandDiagram:
    """A set of traced dispersion curves plus the region they were found in."""

    curves: tuple
    search_region: Rectangle
    ordering_warnings: tuple = field(default_factory=tuple)


def symmetric_k_grid(k_samples: int) -> np.ndarray:
    """k_samples+1 points on [-pi, pi] with exact 0 and exact +/-k pairs."""
    if k_samples % 2 or k_samples < 2:
        raise ValueError("k_samples must be even and >= 2")
    half = np.linspace(0.0, math.pi, k_samples // 2 + 1)
    return np.concatenate((-half[::-1][:-1], half))


def lambdas_at(cell: UnitCell, omega: complex) -> np.ndarray:
    """The four monodromy eigenvalues lambda_j(omega) (Bloch factors e^{ik})."""
    return transfer.monodromy(cell, omega).lambdas()


def dispersion_det(cell: UnitCell, omega: complex, k: float) -> complex:
    """det(M(omega) - e^{ik} I), evaluated as the characteristic quartic at e^{ik}."""
    a3, a2, a1, a0 = transfer.monodromy(cell, omega).coeffs
    x = np.exp(1j * k)
    return complex((((x + a3) * x + a2) * x + a1) * x + a0)


class _Dispersion:
    """Residual oracle f(omega; k) with derivative and noise-scale helpers.

    Isotropic cells use the scalar 2x2 relation tr(M_s) - 2 cos k (simple
    roots, analytic derivative); anisotropic cells use the 4x4 characteristic
    quartic at e^{ik} with central-difference derivatives.
    """

    def __init__(self, cell: UnitCell):
        self.cell = cell
        self.scalar = cell.is_isotropic()
        self._parts = ([l.scalar_parts() for l in cell.layers]
                       if self.scalar else None)

    def _scalar_trace_deriv(self, omega: complex):
        M = np.eye(2, dtype=complex)
        dM = np.zeros((2, 2), dtype=complex)
        for (eps, mu), layer in zip(self._parts, self.cell.layers):
            t = layer.thickness
            n = np.sqrt(complex(eps) * complex(mu))
            if n == 0:
                L = np.array([[1.0, 1j * mu * omega * t],
                              [1j * eps * omega * t, 1.0]])
                dL = np.array([[0.0, 1j * mu * t], [1j * eps * t, 0.0]])
            else:
                c = np.cos(n * omega * t)
                s = np.sin(n * omega * t)
                L = np.array([[c, 1j * mu * s / n], [1j * eps * s / n, c]])
                dL = np.array([[-n * t * s, 1j * mu * t * c],
                               [1j * eps * t * c, -n * t * s]])
            dM = dL @ M + L @ dM
            M = L @ M
        return complex(M[0, 0] + M[1, 1]), complex(dM[0, 0] + dM[1, 1])

    def value(self, omega: complex, k: float) -> complex:
        if self.scalar:
            tau = complex(np.trace(transfer.scalar_monodromy(self.cell, omega)))
            return tau - 2.0 * math.cos(k)
        return dispersion_det(self.cell, omega, k)

    def value_deriv(self, omega: complex, k: float):
        if self.scalar:
            tau, dtau = self._scalar_trace_deriv(omega)
            return tau - 2.0 * math.cos(k), dtau
        f = self.value(omega, k)
        h = 1e-6 * (1.0 + abs(omega))
        fp = (self.value(omega + h, k) - self.value(omega - h, k)) / (2.0 * h)
        return f, fp

    def scale(self, omega: complex, k: float) -> float:
        """Magnitude sum of the residual's terms: its backward-error yardstick."""
        if self.scalar:
            tau = complex(np.trace(transfer.scalar_monodromy(self.cell, omega)))
            return abs(tau) + 2.0
        a3, a2, a1, a0 = transfer.monodromy(self.cell, omega).coeffs
        return (((1.0 + abs(a3)) + abs(a2)) + abs(a1)) + abs(a0)


def _newton_polish(disp: _Dispersion, omega: complex, k: float,
                   step_limit: float, target: float = NEWTON_TARGET,
                   max_iter: int = 40) -> complex:
    """Newton-refine a dispersion root; stops at the evaluation noise floor.

    When the residual reaches its floor while the omega-derivative is itself
    noise-small (band edge: double root), one refinement pass on f' via a
    second difference relocates the edge far below the sqrt(eps) blur.
    """
    w = complex(omega)
    for _ in range(max_iter):
        f, fp = disp.value_deriv(w, k)
        scale = disp.scale(w, k)
        if abs(f) <= 16.0 * _EPS * scale:
            break
        if fp == 0:
            break
        step = f / fp
        if abs(step) > step_limit:
            step *= step_limit / abs(step)
        w -= step
        if abs(step) <= 1e-14 * (1.0 + abs(w)):
            break
    f, fp = disp.value_deriv(w, k)
    scale = disp.scale(w, k)
    h = 1e-6 * (1.0 + abs(w))
    # derivative noise scale: analytic ~eps*scale/h-free, finite-diff ~eps*scale/h
    fp_floor = (64.0 * _EPS * scale if disp.scalar
                else 4.0 * _EPS * scale / h)
    if abs(f) <= max(target * scale, 64.0 * _EPS * scale) and abs(fp) <= fp_floor:
        _, fp_p = disp.value_deriv(w + h, k)
        _, fp_m = disp.value_deriv(w - h, k)
        fpp = (fp_p - fp_m) / (2.0 * h)
        for _ in range(4):
            f, fp = disp.value_deriv(w, k)
            if fpp == 0 or abs(fp) <= 4.0 * _EPS * scale / (h if not disp.scalar else 1.0):
                break
            step = fp / fpp
            if abs(step) > step_limit:
                break
            w -= step
    return w


class _GrazingRoot(Exception):
    """Internal: a boundary sample fell below the clearance bar."""


class _RootSearch:
    def __init__(self, disp: _Dispersion, k: float, tol_bnd: float,
                 max_depth: int, budget: int, deflate_origin: bool = False):
        self.disp = disp
        self.k = k
        self.tol_bnd = tol_bnd
        # near a cluster of m zeros, |f| on a clean interior line drops like
        # dist^m, so interior cuts are gated only by the evaluation noise
        # floor; the spec'd tol_bnd applies to the outer region boundary
        self.noise_bar = 64.0 * np.finfo(float).eps
        self.bar = tol_bnd
        self.max_depth = max_depth
        self.budget = budget
        # At k = 0 every cell has the exact quadruple root omega = 0
        # (M(0) = I), and a 4-fold zero defeats wrapped-phase tracking:
        # 4 subtended angles of ~70 deg alias to a small wrapped step.
        # Dividing it out leaves only the generic simple-root structure.
        self.deflate_origin = deflate_origin
        self.cache: dict = {}

    def f(self, w: complex) -> complex:
        key = (w.real, w.imag)
        v = self.cache.get(key)
        if v is None:
            if len(self.cache) >= self.budget:
                raise MaxDepthExceeded("root search evaluation budget exhausted")
            v = self.disp.value(w, self.k)
            self.cache[key] = v
        return v

    def _checked(self, w: complex) -> complex:
        v = self.f(w)
        s = self.disp.scale(w, self.k)
        # below the rounding floor the phase of the raw value is meaningless
        if abs(v) < self.noise_bar * s:
            raise _GrazingRoot
        if self.deflate_origin:
            if w == 0:
                raise _GrazingRoot
            v = v / (w * w * w * w)
        # the graze bar guards the function actually being tracked, so it
        # applies after deflation
        if abs(v) < self.bar * s:
            raise _GrazingRoot
        return v

    def winding(self, rect: Rectangle, strict: bool = False) -> int:
        """Argument-principle zero count over the rectangle boundary.

        Phase increments are accumulated over adaptively bisected segments;
        every segment must turn by less than pi/2.  strict=True applies the
        boundary-clearance bar tol_bnd (outer region contract); interior
        cuts use the noise-floor bar.
        """
        self.bar = self.tol_bnd if strict else self.noise_bar
        pts = []
        corners = rect.corners()
        per_edge = 8
        for a, b in zip(corners, corners[1:] + corners[:1]):
            for i in range(per_edge):
                pts.append(a + (b - a) * (i / per_edge))
        total = 0.0
        for i in range(len(pts)):
            total += self._segment_phase(pts[i], pts[(i + 1) % len(pts)], 0)
        n = total / (2.0 * math.pi)
        r = round(n)
        if abs(n - r) > 0.25:
            raise _GrazingRoot  # unresolved boundary phase: treat as grazing
        return int(r)

    def _segment_phase(self, a: complex, b: complex, depth: int) -> float:
        # The midpoint is always evaluated: a single wrapped increment can
        # alias to ~0 when one segment spans several nearby roots (subtended
        # phases summing to ~2pi), and only splitting separates their
        # contributions.  A half is accepted only when its phase step is
        # under pi/2 AND its modulus ratio is mild: a cluster of roots just
        # off the segment can turn the phase by 2pi while the wrapped step
        # looks tiny, but it cannot do so without |f| dipping toward the
        # cluster, which the ratio test catches.
        if depth >= 48:
            raise _GrazingRoot
        fa, fb = self._checked(a), self._checked(b)
        mid = 0.5 * (a + b)
        fm = self._checked(mid)
        d1 = float(np.angle(fm / fa))
        d2 = float(np.angle(fb / fm))
        r1 = abs(fm) / abs(fa)
        r2 = abs(fb) / abs(fm)
        if abs(d1) >= 0.5 * math.pi or r1 > 4.0 or r1 < 0.25:
            d1 = self._segment_phase(a, mid, depth + 1)
        if abs(d2) >= 0.5 * math.pi or r2 > 4.0 or r2 < 0.25:
            d2 = self._segment_phase(mid, b, depth + 1)
        return d1 + d2


# No exact 0.5: symmetric regions are common and Hermitian cells put every
# root exactly on the real axis, so a half cut of [-a, a] would run straight
# through them.
_SPLIT_FRACTIONS = (0.53125, 0.4375, 0.578125, 0.40625, 0.46875)


def roots_in_region(cell: UnitCell, k: float, region: Rectangle,
                    max_roots: int = 12, *, tol_bnd: float = TOL_BND,
                    max_depth: int = 48, budget: int = 200000) -> list:
    """All dispersion roots omega inside the region at fixed k.

    Recursive rectangle subdivision with argument-principle counting, then
    Newton polish.  The outer boundary is inflated by 1% (a few retries) when
    it grazes a root; interior split lines are jiggled instead.  Root count
    certification: the number of returned roots equals the outer winding
    count (roots listed with multiplicity, sorted by real then imaginary
    part).
    """
    region = Rectangle(*map(float, region))
    if region.re1 <= region.re0 or region.im1 <= region.im0:
        raise ValueError("empty search region")
    disp = _Dispersion(cell)
    k = float(k)
    at_gamma = abs(math.remainder(k, 2.0 * math.pi)) < 1e-12

    outer = region
    if at_gamma:
        # omega = 0 is the exact 4-fold acoustic root at the zone center;
        # move the boundary off it before deflating it out of the search
        for _ in range(8):
            d_edge = min(abs(outer.re0), abs(outer.re1),
                         abs(outer.im0), abs(outer.im1))
            if not outer.contains(0j) or d_edge > 1e-7 * (1.0 + outer.diag):
                break
            outer = outer.inflated(1.01)
    search = _RootSearch(disp, k, tol_bnd, max_depth, budget,
                         deflate_origin=at_gamma)

    total = None
    for _ in range(8):
        try:
            total = search.winding(outer, strict=True)
            break
        except _GrazingRoot:
            outer = outer.inflated(1.01)
    if total is None:
        raise BoundaryTooClose(
            f"dispersion root on or near the region boundary at k={k}")
    gamma_roots = 4 if (at_gamma and outer.contains(0j)) else 0
    if total + gamma_roots > max_roots:
        raise TooManyRoots(
            f"{total + gamma_roots} roots in region, max_roots={max_roots}")

    roots: list = []
    stack = [(outer, total, 0)]
    while stack:
        rect, n, depth = stack.pop()
        if n == 0:
            continue
        if depth >= max_depth:
            raise MaxDepthExceeded("rectangle subdivision depth limit")
        c = rect.center
        if rect.diag <= 1e-4 * (1.0 + abs(c)):
            # Unresolved cluster: an n-fold or tightly clustered root.  An
            # m-fold root suppresses |f| like dist^m around it, so split
            # lines start grazing the noise floor near this scale; roots
            # separated by less than ~1e-4 are reported with multiplicity
            # at the cluster center.
            w = _newton_polish(disp, c, k, step_limit=rect.diag + 1e-9)
            roots.extend([w] * n)
            continue
        if n == 1 and rect.diag <= 0.05 * (1.0 + abs(c)):
            w = _newton_polish(disp, c, k, step_limit=2.0 * rect.diag)
            if rect.contains(w, margin=0.25 * rect.diag):
                roots.append(w)
                continue
        placed = False
        for frac in _SPLIT_FRACTIONS:
            xm = rect.re0 + frac * rect.width
            ym = rect.im0 + frac * rect.height
            quads = [Rectangle(rect.re0, xm, rect.im0, ym),
                     Rectangle(xm, rect.re1, rect.im0, ym),
                     Rectangle(rect.re0, xm, ym, rect.im1),
                     Rectangle(xm, rect.re1, ym, rect.im1)]
            try:
                counts = [search.winding(q) for q in quads]
            except _GrazingRoot:
                continue
            if sum(counts) != n:
                continue  # phase leak across a jiggled line: retry
            for q, cnt in zip(quads, counts):
                if cnt:
                    stack.append((q, cnt, depth + 1))
            placed = True
            break
        if not placed:
            # A root is pinned to this rectangle's own boundary (inherited
            # from an unluckily placed cut), so every split grazes.  Growing
            # the rectangle moves the boundary off the root; if the grown
            # winding still equals n, the superset holds exactly the same n
            # roots (winding over a superset cannot decrease), so subdividing
            # the grown copy is sound.
            for scale in (1.01, 1.03, 1.07):
                grown = rect.inflated(scale)
                try:
                    if search.winding(grown) == n:
                        stack.append((grown, n, depth + 1))
                        placed = True
                        break
                except _GrazingRoot:
                    continue
        if not placed:
            raise MaxDepthExceeded(
                "could not split a rectangle without grazing a root")
    roots.extend([0j] * gamma_roots)
    roots.sort(key=lambda w: (w.real, w.imag))
    return roots


def _predict(hist: list, k_target: float) -> complex:
    if len(hist) >= 2:
        (k1, w1), (k2, w2) = hist[-2], hist[-1]
        if k2 != k1:
            return w2 + (w2 - w1) * (k_target - k2) / (k2 - k1)
    return hist[-1][1]


def _collision_guard(w: complex, k: float, avoid, collision_tol: float,
                     partial_samples, band_index: int):
    # Degeneracies pinned to the zone center or zone edge are physical gap
    # closings (e^{ik} = +/-1 there), not branch confusion, and the walks
    # terminate at those points, so no swap can follow.
    if k == 0.0 or abs(abs(k) - math.pi) <= 1e-12:
        return
    for other in avoid:
        wo = other.omega_at(k)
        if wo is not None and abs(w - wo) < collision_tol:
            partial = DispersionCurve(band_index, tuple(partial_samples), False)
            raise BandCollision(
                f"band approaches band {other.band_index} within "
                f"{collision_tol} at k={k}", partial=partial)


def trace_band(cell: UnitCell, seed, k_grid: Sequence[float], *,
               band_index: int = 1, step_bound: float = STEP_BOUND,
               min_step: float = MIN_KSTEP, collision_tol: float = COLLISION_TOL,
               avoid: Sequence[DispersionCurve] = (),
               tol_close: float = TOL_CLOSE,
               snap_gamma: bool = True, seed_pair=None) -> DispersionCurve:
    """Continue one dispersion root over the k grid from a polished seed.

    Secant predictor, Newton corrector; the k step is halved (down to
    min_step) whenever the corrector fails to converge or moves further than
    step_bound.  Approaching a curve in ``avoid`` within collision_tol raises
    BandCollision carrying the partial curve.  At k = 0 a predictor close to
    the origin snaps to omega = 0 exactly: M(0) = I makes that the exact
    acoustic root for every cell.  seed_pair, a second resolved point
    (k, omega) near the seed, primes the secant slope so the very first step
    cannot hop onto a neighboring branch (folded bands sit close together
    near the zone center, where a flat predictor favors the slower branch).
    """
    k0, w0 = float(seed[0]), complex(seed[1])
    disp = _Dispersion(cell)
    w0 = _newton_polish(disp, w0, k0, step_limit=0.1 * (1.0 + abs(w0)))
    grid = sorted(float(k) for k in k_grid)
    right = [k for k in grid if k > k0 + 1e-15]
    left = [k for k in grid if k < k0 - 1e-15]
    on_grid = any(abs(k - k0) <= 1e-15 for k in grid)
    primer = None
    if seed_pair is not None:
        kp, wp = float(seed_pair[0]), complex(seed_pair[1])
        wp = _newton_polish(disp, wp, kp, step_limit=0.1 * (1.0 + abs(wp)))
        primer = (kp, wp)

    def walk(targets):
        hist = [(k0, w0)]
        if primer is not None and primer[0] != k0:
            hist.insert(0, primer)
        out = []
        for k_t in targets:
            guard = 0
            while hist[-1][0] != k_t:
                guard += 1
                if guard > 4096:
                    raise ContinuationStall(
                        f"continuation stuck before k={k_t} (band {band_index})")
                k_cur = hist[-1][0]
                k_next = k_t
                ok, w_new = _corrector_step(disp, hist, k_next, step_bound,
                                            snap_gamma)
                while not ok:
                    k_next = 0.5 * (k_cur + k_next)
                    if abs(k_next - k_cur) < min_step:
                        raise ContinuationStall(
                            f"continuation stalled near k={k_cur} "
                            f"(band {band_index})")
                    ok, w_new = _corrector_step(disp, hist, k_next,
                                                step_bound, snap_gamma)
                hist.append((k_next, w_new))
            w_t = hist[-1][1]
            _collision_guard(w_t, k_t, avoid, collision_tol, out, band_index)
            out.append((k_t, w_t))
        return out

    right_samples = walk(right)
    left_samples = walk(list(reversed(left)))

    samples = []
    if on_grid:
        samples.append((k0, w0))
    samples.extend(right_samples)
    samples.extend(left_samples)
    samples.sort(key=lambda s: s[0])
    closed = False
    if samples and abs(samples[0][0] + math.pi) < 1e-12 \
            and abs(samples[-1][0] - math.pi) < 1e-12:
        closed = abs(samples[0][1] - samples[-1][1]) <= tol_close
    return DispersionCurve(band_index, tuple(samples), closed)


def _corrector_step(disp: _Dispersion, hist, k_t: float, step_bound: float,
                    snap_gamma: bool):
    pred = _predict(hist, k_t)
    # acoustic bands pass through the exact root omega = 0 at the zone
    # center (M(0) = I); the threshold scales with the last k step so coarse
    # grids still snap (band slopes are bounded by ~2 for the cells here)
    if snap_gamma and k_t == 0.0 \
            and abs(pred) <= max(0.05, 2.0 * abs(hist[-1][0])):
        return True, 0.0 + 0.0j
    w = _newton_polish(disp, pred, k_t, step_limit=step_bound)
    f = disp.value(w, k_t)
    scale = disp.scale(w, k_t)
    if abs(f) > max(NEWTON_TARGET * scale, 256.0 * _EPS * scale):
        return False, pred
    if abs(w - pred) > step_bound:
        return False, pred
    return True, w


def refine_between(cell: UnitCell, s1, s2):
    """Dispersion sample at the k midpoint of two neighboring band samples.

    Linear prediction from the bracket, Newton-corrected; the step bound is
    the bracket's own omega spread, so the corrector cannot leave the branch.
    """
    (k1, w1), (k2, w2) = (float(s1[0]), complex(s1[1])), (float(s2[0]), complex(s2[1]))
    if k1 == k2:
        raise ValueError("bracket samples share the same k")
    disp = _Dispersion(cell)
    km = 0.5 * (k1 + k2)
    bound = max(abs(w2 - w1), 1e-6 * (1.0 + abs(w1)))
    ok, wm = _corrector_step(disp, [(k1, w1), (k2, w2)], km, bound, False)
    if not ok:
        raise ContinuationStall(f"refinement corrector failed at k={km}")
    return km, wm


def band_diagram(cell: UnitCell, region: Rectangle, n_bands: int,
                 k_samples: int = 512, *, collision_tol: float = COLLISION_TOL,
                 tol_close: float = TOL_CLOSE, max_roots: Optional[int] = None,
                 tol_bnd: float = TOL_BND) -> BandDiagram:
    """Locate and trace the first n_bands bands over the Brillouin zone.

    Seeds are resolved just off the zone center (k = +/-dk, the first grid
    points), where the folded +k/-k branches split into simple roots; the
    two half-zones are traced separately and rank-paired by real part, which
    is the band-ordering convention.  The k = 0 sample comes from the
    right-half predictor (the acoustic bands snap to the exact root 0).
    """
    region = Rectangle(*map(float, region))
    grid = symmetric_k_grid(k_samples)
    dk = float(grid[k_samples // 2 + 1])
    cap = max_roots if max_roots is not None else 4 * n_bands + 8
    seeds_plus = [w for w in roots_in_region(cell, dk, region, cap,
                                             tol_bnd=tol_bnd)
                  if w.real >= -1e-9]
    seeds_minus = [w for w in roots_in_region(cell, -dk, region, cap,
                                              tol_bnd=tol_bnd)
                   if w.real >= -1e-9]
    if len(seeds_plus) < n_bands or len(seeds_minus) < n_bands:
        raise ValueError(
            f"found only {min(len(seeds_plus), len(seeds_minus))} seeds in "
            f"the region, need {n_bands} (enlarge the region)")
    # second resolved point just off each seed primes the secant slope;
    # rank matching is safe because branches cannot cross within the
    # quarter-step offset without also tripping the collision guard
    kp = 1.25 * dk
    prime_plus = [w for w in roots_in_region(cell, kp, region, cap,
                                             tol_bnd=tol_bnd)
                  if w.real >= -1e-9]
    prime_minus = [w for w in roots_in_region(cell, -kp, region, cap,
                                              tol_bnd=tol_bnd)
                   if w.real >= -1e-9]
    if len(prime_plus) != len(seeds_plus) or len(prime_minus) != len(seeds_minus):
        prime_plus = prime_minus = None
    right_grid = [k for k in grid if k > 0]
    left_grid = [k for k in grid if k < 0]
    curves = []
    for n in range(n_bands):
        wp, wm = seeds_plus[n], seeds_minus[n]
        pair_p = (kp, prime_plus[n]) if prime_plus is not None else None
        pair_m = (-kp, prime_minus[n]) if prime_minus is not None else None
        right = trace_band(cell, (dk, wp), right_grid, band_index=n + 1,
                           avoid=curves, collision_tol=collision_tol,
                           tol_close=tol_close, seed_pair=pair_p)
        left = trace_band(cell, (-dk, wm), left_grid, band_index=n + 1,
                          avoid=curves, collision_tol=collision_tol,
                          tol_close=tol_close, seed_pair=pair_m)
        disp = _Dispersion(cell)
        hist = [right.samples[1], right.samples[0]]  # walk toward k = 0
        ok, w_gamma = _corrector_step(disp, hist, 0.0, STEP_BOUND, True)
        if not ok:
            raise ContinuationStall(f"zone-center corrector failed (band {n+1})")
        samples = (left.samples + ((0.0, w_gamma),) + right.samples)
        closed = abs(samples[0][1] - samples[-1][1]) <= tol_close
        curves.append(DispersionCurve(n + 1, samples, closed))
    order = sorted(range(len(curves)),
                   key=lambda i: (min(w.real for w in curves[i].omegas()),
                                  max(w.real for w in curves[i].omegas())))
    curves = [DispersionCurve(j + 1, curves[i].samples, curves[i].closed)
              for j, i in enumerate(order)]
    warnings_list = []
    spans = [(min(w.real for w in c.omegas()), max(w.real for w in c.omegas()))
             for c in curves]
    for a in range(len(spans) - 1):
        if spans[a][1] > spans[a + 1][0]:
            msg = (f"bands {a+1} and {a+2} overlap in real part "
                   f"([{spans[a][0]:.6g}, {spans[a][1]:.6g}] vs "
                   f"[{spans[a+1][0]:.6g}, {spans[a+1][1]:.6g}]): "
                   "ordering by real part is ambiguous")
            warnings_list.append(msg)
            warnings.warn(msg)
    return BandDiagram(tuple(curves), region, tuple(warnings_list))


def is_reciprocal(diagram: BandDiagram, tol: float = 1e-7) -> list:
    """Per-band reciprocity check: max_k |omega(k) - omega(-k)| <= tol."""
    out = []
    for curve in diagram.curves:
        table = {round(k, 12): w for k, w in curve.samples}
        worst = 0.0
        for k, w in curve.samples:
            if k <= 0:
                continue
            wo = table.get(round(-k, 12))
            if wo is None:
                continue
            worst = max(worst, abs(w - wo))
        out.append(worst <= tol)
    return out
