"""Spectral topology: the eigenvalue-count index, curve windings, and the
identities connecting them.

The index Ind(omega) counts monodromy eigenvalues inside the unit circle
against those outside; the winding number of a traced dispersion loop about a
base point is computed from argument increments of the sampled curve.  For
frequencies inside a loop the two agree (the index jumps by the winding when
omega crosses the curve), which is what verify_index_jump checks, and the
index is homotopy-invariant along parameter paths that keep the witness away
from the spectrum, which is what homotopy_track checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import media, spectra, transfer
from .errors import (BasePointOnCurve, NoInterior, NumericalContradiction,
                     OnSpectrum, PathBlocked, RefinementBudgetExceeded,
                     UnstableIndex)
from .media import HomotopyFamily, UnitCell
from .spectra import BandDiagram, DispersionCurve

TOL_CIRCLE = 1e-8
TOL_CURVE = 1e-7


@dataclass(frozen=True)
class SpectralIndex:
    """Eigenvalue-count index of M(omega) against the unit circle.

    value = (n_inside - n_outside) / 2, an integer in {-2, -1, 0, 1, 2}
    whenever all four eigenvalues are off the circle (min_gap > tol_circle);
    the constructor is only reached in that case.
    """

    value: int
    n_inside: int
    n_outside: int
    min_gap: float


@dataclass(frozen=True)
class WindingResult:
    """Discrete winding of a closed sampled curve about a base point."""

    winding: int
    base_point: complex
    min_distance: float
    samples_used: int


def _unit_gaps(lambdas) -> np.ndarray:
    return np.array([abs(abs(l) - 1.0) for l in lambdas])


def spectral_index(cell: UnitCell, omega: complex,
                   tol_circle: float = TOL_CIRCLE) -> SpectralIndex:
    """Ind(omega): half the difference of eigenvalue counts across |z| = 1.

    Branch points of the eigenvalue functions need no special handling: the
    counts are continuous across them.  Only eigenvalues on the circle itself
    (within tol_circle) are rejected, because the index is undefined on the
    spectrum.
    """
    lambdas = transfer.monodromy(cell, complex(omega)).lambdas()
    gaps = _unit_gaps(lambdas)
    min_gap = float(gaps.min())
    if min_gap <= tol_circle:
        raise OnSpectrum(
            f"omega={omega} lies on the spectrum (min ||lambda|-1| = "
            f"{min_gap:.3e})", min_gap=min_gap)
    n_in = int(sum(1 for l in lambdas if abs(l) < 1.0))
    n_out = 4 - n_in
    return SpectralIndex(value=(n_in - n_out) // 2, n_inside=n_in,
                         n_outside=n_out, min_gap=min_gap)


def _cyclic_samples(curve: DispersionCurve):
    """Curve samples as a cyclic sequence (zone-edge duplicate dropped)."""
    samples = list(curve.samples)
    if len(samples) >= 2 and abs(samples[0][1] - samples[-1][1]) <= 10 * TOL_CURVE \
            and abs(abs(samples[0][0]) - math.pi) < 1e-9 \
            and abs(abs(samples[-1][0]) - math.pi) < 1e-9:
        samples = samples[:-1]
    return samples


def winding_number(curve: DispersionCurve, base: complex, *,
                   cell: Optional[UnitCell] = None,
                   tol_curve: float = TOL_CURVE,
                   refine_budget: int = 4096) -> WindingResult:
    """W(curve; base) from summed argument increments of (omega_j - base).

    Every increment must stay below pi/2; offending edges are bisected in k
    (new dispersion samples continued from the bracketing pair) when the cell
    is available, up to refine_budget extra samples.  The accumulated angle
    of a closed polygon with sub-pi/2 steps is an exact multiple of 2 pi up
    to rounding, so the result is an exact integer.
    """
    base = complex(base)
    samples = _cyclic_samples(curve)
    if len(samples) < 3:
        raise ValueError("winding needs at least 3 curve samples")
    min_dist = min(abs(w - base) for _, w in samples)
    if min_dist <= tol_curve:
        raise BasePointOnCurve(
            f"base point within {min_dist:.3e} of the curve")
    state = {"budget": int(refine_budget), "extra": 0, "min_dist": min_dist}

    def edge(s1, s2, depth: int, refinable: bool) -> float:
        d = float(np.angle((s2[1] - base) / (s1[1] - base)))
        if abs(d) < 0.5 * math.pi:
            return d
        if not refinable or cell is None or depth >= 60:
            raise RefinementBudgetExceeded(
                "coarse argument step could not be refined"
                + ("" if cell is not None else " (no cell provided)"))
        if state["budget"] <= 0:
            raise RefinementBudgetExceeded(
                f"refinement budget exhausted ({refine_budget} samples)")
        state["budget"] -= 1
        state["extra"] += 1
        sm = spectra.refine_between(cell, s1, s2)
        dm = abs(sm[1] - base)
        if dm <= tol_curve:
            raise BasePointOnCurve(
                f"base point within {dm:.3e} of the refined curve")
        state["min_dist"] = min(state["min_dist"], dm)
        return edge(s1, sm, depth + 1, True) + edge(sm, s2, depth + 1, True)

    total = 0.0
    for i in range(len(samples) - 1):
        total += edge(samples[i], samples[i + 1], 0, True)
    # closing edge: both ends sit at the zone edge (same k mod 2 pi), so
    # there is no k interval to refine; for a closed curve it is a short hop
    total += edge(samples[-1], samples[0], 0, False)
    n = total / (2.0 * math.pi)
    r = round(n)
    if abs(n - r) > 1e-6:
        raise NumericalContradiction(
            f"winding sum {n!r} is not an integer; the curve does not close")
    return WindingResult(winding=int(r), base_point=base,
                         min_distance=state["min_dist"],
                         samples_used=len(samples) + state["extra"])


def _polygon_area_centroid(pts):
    """Signed shoelace area and area centroid of a closed polygon."""
    area2 = 0.0
    cx = cy = 0.0
    for i in range(len(pts)):
        a, b = pts[i], pts[(i + 1) % len(pts)]
        cross = a.real * b.imag - b.real * a.imag
        area2 += cross
        cx += (a.real + b.real) * cross
        cy += (a.imag + b.imag) * cross
    if area2 == 0.0:
        return 0.0, complex(np.mean([p.real for p in pts]),
                            np.mean([p.imag for p in pts]))
    return 0.5 * area2, complex(cx / (3.0 * area2), cy / (3.0 * area2))


def interior_point(curve: DispersionCurve, *,
                   cell: Optional[UnitCell] = None,
                   tol_curve: float = TOL_CURVE, grid: int = 48) -> complex:
    """A point strictly inside the loop traced by the curve.

    The polygon centroid is tried first; traced loops are often thin
    crescents whose centroid falls outside, in which case the bounding box
    is sampled and the deepest inside point (largest distance to the sampled
    curve among points of nonzero winding) is returned.
    """
    pts = [w for _, w in _cyclic_samples(curve)]
    if len(pts) < 3:
        raise NoInterior("curve has too few samples to bound a region")
    area, centroid = _polygon_area_centroid(pts)
    diam = max((max(p.real for p in pts) - min(p.real for p in pts)),
               (max(p.imag for p in pts) - min(p.imag for p in pts)))
    # Hermitian bands trace back and forth over a real segment; corrector
    # noise in Im omega (up to ~1e-8) gives such curves a spurious sliver
    # area, so the degeneracy bar sits well above it (true loops bound
    # relative areas of 1e-2 or more)
    if diam == 0.0 or abs(area) <= 1e-6 * diam * diam:
        raise NoInterior("curve bounds no area (degenerate loop)")

    def usable(p: complex) -> bool:
        try:
            return winding_number(curve, p, cell=cell,
                                  tol_curve=tol_curve).winding != 0
        except (BasePointOnCurve, RefinementBudgetExceeded):
            return False

    if usable(centroid):
        return centroid
    # thin loop: the centroid fell outside.  Grid the bounding box, keep the
    # points whose rough angle sum says "inside", and verify the deepest of
    # them (largest clearance from the sampled curve) exactly.
    re_lo, re_hi = min(p.real for p in pts), max(p.real for p in pts)
    im_lo, im_hi = min(p.imag for p in pts), max(p.imag for p in pts)
    arr = np.array(pts)
    cyc = np.append(arr, arr[0])
    candidates = []
    for x in np.linspace(re_lo, re_hi, grid + 2)[1:-1]:
        for y in np.linspace(im_lo, im_hi, grid + 2)[1:-1]:
            p = complex(x, y)
            d = float(np.abs(arr - p).min())
            if d <= tol_curve:
                continue
            rough = float(np.angle((cyc[1:] - p) / (cyc[:-1] - p)).sum()
                          / (2.0 * math.pi))
            if abs(rough) > 0.5:
                candidates.append((d, p))
    candidates.sort(key=lambda t: -t[0])
    for _, p in candidates:
        if usable(p):
            return p
    raise NoInterior("no grid point falls inside the loop")


_OCTAGON = [np.exp(1j * (2.0 * math.pi * j / 8.0)) for j in range(8)]


def component_index(cell: UnitCell, region_sample: complex,
                    curve_set: BandDiagram,
                    tol_curve: float = TOL_CURVE,
                    tol_circle: float = TOL_CIRCLE) -> SpectralIndex:
    """Index at a sample point, certified locally constant.

    The index of a gapped component does not depend on the point chosen in
    it; this evaluates Ind at the sample and at 8 surrounding points
    (radius tol_curve/2) and insists they all agree.
    """
    p = complex(region_sample)
    dist = min((min(abs(w - p) for w in c.omegas())
                for c in curve_set.curves), default=math.inf)
    if dist <= tol_curve:
        raise BasePointOnCurve(
            f"sample within {dist:.3e} of a traced curve")
    idx = spectral_index(cell, p, tol_circle)
    for d in _OCTAGON:
        q = p + 0.5 * tol_curve * d
        try:
            other = spectral_index(cell, q, tol_circle)
        except OnSpectrum as exc:
            raise UnstableIndex(
                f"perturbed evaluation at {q} fell on the spectrum") from exc
        if other.value != idx.value:
            raise UnstableIndex(
                f"index flips from {idx.value} to {other.value} within "
                f"{tol_curve / 2:.1e} of {p}")
    return idx


def verify_index_jump(cell: Optional[UnitCell], curve: DispersionCurve,
                      inner: complex, outer: complex, *,
                      others: Sequence[DispersionCurve] = (),
                      tol_curve: float = TOL_CURVE,
                      tol_circle: float = TOL_CIRCLE) -> dict:
    """Check Ind(inner) - Ind(outer) = W(curve; inner) for one loop.

    ``inner`` must wind nonzero about the curve, ``outer`` must wind zero
    about it and about every curve in ``others``.  With cell=None (synthetic
    curves with no medium behind them) only the winding bookkeeping is
    reported and the index fields are None.
    """
    pts = [w for _, w in _cyclic_samples(curve)]
    if len(pts) >= 3:
        area, _ = _polygon_area_centroid(pts)
        diam = max((max(p.real for p in pts) - min(p.real for p in pts)),
                   (max(p.imag for p in pts) - min(p.imag for p in pts)))
        # same sliver-noise bar as interior_point
        if diam == 0.0 or abs(area) <= 1e-6 * diam * diam:
            raise NoInterior("curve bounds no area (degenerate loop)")
    w_inner = winding_number(curve, inner, cell=cell, tol_curve=tol_curve)
    if w_inner.winding == 0:
        raise ValueError("inner point does not lie inside the loop")
    w_outer = winding_number(curve, outer, cell=cell, tol_curve=tol_curve)
    if w_outer.winding != 0:
        raise ValueError("outer point lies inside the loop")
    for other in others:
        if winding_number(other, outer, cell=cell,
                          tol_curve=tol_curve).winding != 0:
            raise ValueError(
                f"outer point lies inside band {other.band_index}'s loop")
    report = {
        "winding_inner": w_inner.winding,
        "winding_outer": w_outer.winding,
        "inner": complex(inner),
        "outer": complex(outer),
        "ind_inner": None,
        "ind_outer": None,
        "jump": None,
        "passed": None,
    }
    if cell is not None:
        ind_in = spectral_index(cell, inner, tol_circle)
        ind_out = spectral_index(cell, outer, tol_circle)
        report["ind_inner"] = ind_in.value
        report["ind_outer"] = ind_out.value
        report["jump"] = ind_in.value - ind_out.value
        report["passed"] = (report["jump"] == w_inner.winding)
    return report


def _circle_clearance(cell: UnitCell, omega: complex) -> float:
    lam = transfer.monodromy(cell, complex(omega)).lambdas()
    return float(_unit_gaps(lam).min())


def _recenter(cell: UnitCell, omega: complex, target: float,
              floor: float, max_moves: int = 64) -> complex:
    """Derivative-free ascent of min_j ||lambda_j| - 1| from omega.

    The objective is a minimum of smooth functions (kinked), so a shrinking
    octagon probe is used instead of a gradient.  Stops once the clearance
    reaches ``target`` or the probe radius falls below ``floor``.
    """
    w = complex(omega)
    h = _circle_clearance(cell, w)
    r = max(4.0 * floor, 0.02 * (1.0 + abs(w)))
    moves = 0
    while h < target and moves < max_moves:
        best_w, best_h = None, h
        for d in _OCTAGON:
            q = w + r * d
            hq = _circle_clearance(cell, q)
            if hq > best_h:
                best_w, best_h = q, hq
        if best_w is None:
            r *= 0.5
            if r < floor:
                break
        else:
            w, h = best_w, best_h
            moves += 1
    return w


# Band-edge eigenvalue collisions (two double roots passing each other)
# smear computed moduli by ~1e-5, so a resolvable gap must clear well above
# that and span more than an isolated scan point.
_GAP_CLEARANCE = 1e-3


def _gap_runs(ws, clear, on_tol: float):
    """Maximal scanned intervals certifiably off the spectrum.

    A run counts as a gap only when it is bounded by spectrum on both sides,
    spans at least 2 scan points, and its best clearance rises above the
    eigenvalue-collision noise floor.
    """
    on = clear < on_tol
    runs = []
    i = 0
    while i < len(ws):
        if not on[i]:
            j = i
            while j < len(ws) and not on[j]:
                j += 1
            if i > 0 and j < len(ws) and j - i >= 2:
                k = i + int(np.argmax(clear[i:j]))
                if clear[k] > _GAP_CLEARANCE:
                    runs.append((float(ws[i]), float(ws[j - 1]),
                                 float(ws[k]), float(clear[k])))
            i = j
        else:
            i += 1
    return runs


def _auto_witness(cell: UnitCell, re_max: float = 4.0,
                  n_scan: int = 1601) -> complex:
    """A real frequency deep inside the first spectral gap of the cell."""
    ws = np.linspace(0.05, re_max, n_scan)
    clear = np.array([_circle_clearance(cell, complex(w)) for w in ws])
    runs = _gap_runs(ws, clear, 1e-6)
    if not runs:
        raise NoInterior("no spectral gap found on the scanned interval")
    best = max(runs, key=lambda r: r[3])
    return complex(best[2])


def homotopy_track(family: HomotopyFamily, witness, t_steps: int, *,
                   tol_path: float = 1e-6, safety: float = 1e-3,
                   tol_circle: float = TOL_CIRCLE) -> list:
    """Continue a gap witness across the family, recording Ind(g(t)).

    At each t the witness is re-centered (clearance ascent) whenever its
    distance to the spectrum drops below ``safety``; if no relocation keeps
    clearance above ``tol_path`` the track raises PathBlocked carrying the
    partial track.  The index must stay 0 along the whole path (it starts in
    a gap of the Hermitian endpoint); a change would mean the witness
    crossed the spectrum, which clearance tracking forbids.
    """
    if t_steps < 2:
        raise ValueError("t_steps must be >= 2")
    cell0 = media.homotopy_at(family, 0.0)
    g = _auto_witness(cell0) if isinstance(witness, str) and witness == "auto" \
        else complex(witness)
    track = []
    for t in np.linspace(0.0, 1.0, t_steps):
        cell_t = media.homotopy_at(family, float(t))
        h = _circle_clearance(cell_t, g)
        if h < safety:
            g = _recenter(cell_t, g, target=safety, floor=tol_path)
            h = _circle_clearance(cell_t, g)
        if h <= tol_path:
            exc = PathBlocked(
                f"witness clearance {h:.3e} <= {tol_path:.1e} at t={t}")
            exc.partial = track
            raise exc
        idx = spectral_index(cell_t, g, tol_circle)
        if track and idx.value != track[0][2].value:
            raise NumericalContradiction(
                f"index changed from {track[0][2].value} to {idx.value} "
                f"at t={t} without the witness crossing the spectrum")
        track.append((float(t), g, idx))
    return track


def assumption_check(cell_h: UnitCell, region, *, n_scan: int = 1601,
                     on_tol: float = 1e-6) -> dict:
    """Check the gapped-component hypotheses on a Hermitian cell.

    (i) the scanned real-frequency window contains a spectral gap (an
    interval where no eigenvalue has unit modulus), and (ii) just outside
    the gap exactly two eigenvalues sit on the unit circle and are distinct.
    Reports witnesses; never raises on failure.
    """
    if not media.is_hermitian(cell_h):
        raise ValueError("assumption check applies to Hermitian cells")
    region = spectra.Rectangle(*map(float, region))
    lo = max(region.re0, 0.02)
    ws = np.linspace(lo, region.re1, n_scan)
    clear = np.array([_circle_clearance(cell_h, complex(w)) for w in ws])
    on = clear < on_tol
    runs = _gap_runs(ws, clear, on_tol)
    gap = None
    if runs:
        widest = max(runs, key=lambda r: r[1] - r[0])
        gap = (widest[0], widest[1])
    report = {
        "gap_found": gap is not None,
        "gap": gap,
        "witness": None if gap is None else complex(0.5 * (gap[0] + gap[1])),
        "on_circle_count": None,
        "distinct": None,
        "two_on_circle": None,
        "spectrum_sample": None,
        "passed": False,
    }

    def circle_stats(w: complex):
        lam = transfer.monodromy(cell_h, w).lambdas()
        on_circ = [l for l in lam if abs(abs(l) - 1.0) < on_tol]
        sep = min((abs(a - b) for idx, a in enumerate(on_circ)
                   for b in on_circ[idx + 1:]), default=math.inf)
        return len(on_circ), sep

    sample = None
    if gap is not None:
        # walk outward from the gap edges until the two circle eigenvalues
        # separate (at a band edge they coalesce)
        step = ws[1] - ws[0]
        for edge_w, direction in ((gap[0], -1.0), (gap[1], +1.0)):
            for m in range(1, 200):
                w = complex(edge_w + direction * m * step)
                if w.real < lo or w.real > region.re1:
                    break
                cnt, sep = circle_stats(w)
                if cnt >= 2 and sep > 0.05:
                    sample = (w, cnt, sep)
                    break
            if sample:
                break
    if sample is None and on.any():
        w = complex(ws[int(np.argmin(clear))])
        cnt, sep = circle_stats(w)
        sample = (w, cnt, sep)
    if sample is not None:
        w, cnt, sep = sample
        report["spectrum_sample"] = w
        report["on_circle_count"] = cnt
        report["two_on_circle"] = (cnt == 2)
        report["distinct"] = bool(sep > on_tol) if cnt >= 2 else False
    report["passed"] = bool(report["gap_found"] and report["two_on_circle"]
                            and report["distinct"])
    return report
