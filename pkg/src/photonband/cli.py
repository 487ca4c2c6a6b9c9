"""Command-line drivers: presets or config files in, CSV/JSON artifacts out.

Subcommands
-----------
band      trace a band diagram; writes bands.csv, bands.json, bands.meta.json
index     eigenvalue-count index at one frequency; writes report.json
winding   winding number of a traced band about a base point; report.json
edge      edge mode at a point-gap frequency; mode.csv plus report.json
homotopy  track a gap witness across a material interpolation; report.json
verify    invariant / edge-mode / gap-index verification suites; report.json

Every JSON artifact carries a schema_version field, validates against the
schema files shipped under photonband/schemas/, and stores complex numbers
as {"re": x, "im": y} objects, never strings.  Writes go through a temp
file in the target directory followed by an atomic rename.  Artifact
content is a pure function of configuration and seed; wall-clock data lives
only in the *.meta.json sidecars, so artifact hashes are reproducible.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata, resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import edge, media, presets, spectra, topology
from .errors import (BasePointOnCurve, ConfigError, IndexZero, OnSpectrum,
                     PhotonbandError, RefinementBudgetExceeded)

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# Tolerance registry: flag suffix -> (library default, what it controls).
# A None default means the library derives the value adaptively.
DEFAULT_TOLS = {
    "bnd": (spectra.TOL_BND, "root residual / region-boundary clearance"),
    "close": (spectra.TOL_CLOSE, "band closure across the zone edge"),
    "collision": (spectra.COLLISION_TOL, "band collision guard distance"),
    "circle": (topology.TOL_CIRCLE, "on-spectrum rejection of |lambda|=1"),
    "curve": (topology.TOL_CURVE, "winding base-point distance to curve"),
    "cluster": (None, "eigenvalue clustering bar for eigenpair selection"),
    "bc": (edge.TOL_BC, "boundary-condition residual"),
    "decay": (1e-6, "fitted decay slope agreement"),
    "ode": (1e-6, "profile ODE residual"),
    "reciprocal": (1e-7, "band reciprocity comparison"),
}

_BC_TABLE = {
    "outgoing_vacuum": edge.OUTGOING_VACUUM,
    "outgoing": edge.OUTGOING_VACUUM,
    "pec": edge.PEC,
    "pmc": edge.PMC,
}

_EXAMPLE3_PAIR = ("example3-hermitian", "example3-nonhermitian")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """Resolved run configuration: cell, window, knobs, and output paths."""

    command: str
    cell: media.UnitCell
    region: tuple
    n_bands: int
    preset: Optional[presets.Preset]
    params: dict
    k_samples: int = 512
    seed: int = 0
    threads: int = 1
    out_dir: Path = Path(".")
    tols: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def tol(self, name: str) -> Optional[float]:
        if name in self.tols:
            return self.tols[name]
        return DEFAULT_TOLS[name][0]

    def effective_tols(self) -> dict:
        return {name: self.tol(name) for name in DEFAULT_TOLS}

    def option(self, name, default=None):
        value = self.options.get(name)
        return default if value is None else value


def _parse_complex_token(text) -> complex:
    """Complex scalar from CLI text: '1.5-0.3i', '1.5', or 're,im'."""
    if isinstance(text, complex):
        return text
    t = str(text).strip().replace(" ", "")
    try:
        if "," in t:
            re_s, im_s = t.split(",")
            z = complex(float(re_s), float(im_s))
        else:
            z = complex(t.replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex number {text!r}: "
                          "use forms like 1.5-0.3i or 1.5,-0.3") from exc
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ConfigError(f"complex number {text!r} is not finite")
    return z


def _complex_from_json(value, what: str) -> complex:
    """Complex scalar from config JSON: number, {'re','im'}, or [re, im]."""
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return _parse_complex_token(value)
    raise ConfigError(f"{what}: expected a number, [re, im], or "
                      f"{{'re':..,'im':..}}, got {value!r}")


def _parse_region(value) -> tuple:
    if isinstance(value, str):
        parts = value.split(",")
    else:
        parts = list(value)
    if len(parts) != 4:
        raise ConfigError("region must be re0,re1,im0,im1")
    try:
        re0, re1, im0, im1 = (float(p) for p in parts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad region value: {exc}") from exc
    if not (re0 < re1 and im0 < im1):
        raise ConfigError("region must satisfy re0 < re1 and im0 < im1")
    return (re0, re1, im0, im1)


def _tensor_from_json(value, what: str) -> media.MaterialTensor:
    if isinstance(value, (int, float, str)) or (
            isinstance(value, dict) and set(value) <= {"re", "im"}):
        return media.MaterialTensor.isotropic(_complex_from_json(value, what))
    if isinstance(value, dict):
        try:
            return media.MaterialTensor(
                xx=_complex_from_json(value["xx"], what + ".xx"),
                xy=_complex_from_json(value.get("xy", 0.0), what + ".xy"),
                yx=_complex_from_json(value.get("yx", 0.0), what + ".yx"),
                yy=_complex_from_json(value["yy"], what + ".yy"),
                zz=_complex_from_json(value.get("zz", 1.0), what + ".zz"))
        except KeyError as exc:
            raise ConfigError(f"{what}: tensor needs xx and yy") from exc
    if isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            block = [[_complex_from_json(value[i][j], what) for j in range(2)]
                     for i in range(2)]
        except (TypeError, IndexError) as exc:
            raise ConfigError(f"{what}: 2x2 tensor rows malformed") from exc
        return media.MaterialTensor.from_inplane(np.array(block))
    raise ConfigError(f"{what}: cannot interpret material tensor {value!r}")


def _cell_from_layers(spec_list, period: float) -> media.UnitCell:
    layers = []
    for j, entry in enumerate(spec_list):
        if not isinstance(entry, dict):
            raise ConfigError(f"layers[{j}] must be an object")
        try:
            thickness = float(entry["thickness"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"layers[{j}]: bad or missing thickness") from exc
        eps = _tensor_from_json(entry.get("eps", 1.0), f"layers[{j}].eps")
        mu = _tensor_from_json(entry.get("mu", 1.0), f"layers[{j}].mu")
        layers.append(media.Layer(thickness=thickness, eps=eps, mu=mu))
    if not layers:
        raise ConfigError("layers list is empty")
    return media.UnitCell(layers=tuple(layers), period=float(period))


def _load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def _resolve_config(args) -> RunConfig:
    """Merge config file and flags (flags win), resolve the unit cell."""
    file_cfg = _load_config_file(args.config) if args.config else {}

    def pick(name, flag_value, default=None):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(name, default)

    preset_name = pick("preset", args.preset)
    layers_spec = file_cfg.get("layers")
    preset = None
    if layers_spec is not None and preset_name is None:
        cell = _cell_from_layers(layers_spec, file_cfg.get("period", 1.0))
        region_raw = pick("region", args.region)
        if region_raw is None:
            raise ConfigError("explicit layer cells need a region")
        region = _parse_region(region_raw)
        n_bands = int(pick("n_bands", getattr(args, "n_bands", None), 0) or 0)
        if n_bands < 1:
            raise ConfigError("explicit layer cells need n_bands >= 1")
        params = {"kind": "explicit", "n_layers": len(cell.layers),
                  "period": cell.period}
    else:
        if preset_name is None:
            preset_name = "example3-nonhermitian"
        preset = presets.get_preset(preset_name, file_cfg.get("afa"))
        cell = preset.cell
        region_raw = pick("region", args.region)
        region = _parse_region(region_raw) if region_raw is not None \
            else tuple(preset.region)
        n_bands = int(pick("n_bands", getattr(args, "n_bands", None),
                           preset.n_bands))
        params = dict(preset.params)

    seed = int(pick("seed", args.seed, 0))
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    k_samples = int(pick("k_samples", args.k_samples, 512))
    if k_samples < 8:
        raise ConfigError("k-samples must be at least 8")
    threads = int(pick("threads", args.threads, 0) or 0)
    if threads <= 0:
        threads = min(8, os.cpu_count() or 1)

    tols = {}
    for name in DEFAULT_TOLS:
        flag_value = getattr(args, f"tol_{name}", None)
        file_value = file_cfg.get("tolerances", {}).get(name)
        value = flag_value if flag_value is not None else file_value
        if value is not None:
            value = float(value)
            if not value > 0:
                raise ConfigError(f"tolerance {name} must be positive")
            tols[name] = value

    options = {}
    for name in ("omega", "band", "base", "bc", "z_max", "samples_per_cell",
                 "witness", "t_steps", "samples"):
        options[name] = pick(name, getattr(args, name, None))

    out_dir = Path(pick("out", args.out, "."))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}") \
            from exc

    return RunConfig(command=args.command, cell=cell, region=region,
                     n_bands=n_bands, preset=preset, params=params,
                     k_samples=k_samples, seed=seed, threads=threads,
                     out_dir=out_dir, tols=tols, options=options)


# ---------------------------------------------------------------------------
# serialization helpers


def _cjson(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent),
                               prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _schema(name: str) -> dict:
    with resources.files("photonband").joinpath(
            "schemas", name).open(encoding="utf-8") as fh:
        return json.load(fh)


def _emit_json(path: Path, obj: dict, schema_name: str) -> None:
    try:
        jsonschema.validate(obj, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        raise PhotonbandError(
            f"internal: {path.name} failed schema validation: "
            f"{exc.message}") from exc
    _write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _emit_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _write_atomic(path, buf.getvalue())


def _emit_meta(cfg: RunConfig, files, elapsed: float, meta_name: str) -> None:
    try:
        pkg_version = metadata.version("photonband")
    except metadata.PackageNotFoundError:
        pkg_version = "unknown"
    meta = {
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command,
        "files": list(files),
        "preset": cfg.preset.name if cfg.preset else None,
        "params": {k: (float(v) if isinstance(v, (int, float)) else v)
                   for k, v in cfg.params.items()},
        "seed": cfg.seed,
        "k_samples": cfg.k_samples,
        "threads": cfg.threads,
        "region": [float(v) for v in cfg.region],
        "tolerances": cfg.effective_tols(),
        "timings": {"elapsed_seconds": float(elapsed)},
        "timestamp_utc": datetime.now(timezone.utc).strftime(
            "%Y-%m-%dT%H:%M:%SZ"),
        "versions": {"photonband": pkg_version, "numpy": np.__version__},
    }
    _emit_json(cfg.out_dir / meta_name, meta, "meta.schema.json")


def _pmap(fn, items, threads: int) -> list:
    """Order-preserving parallel map; falls back to serial for tiny work."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# shared computation helpers


def _trace_diagram(cfg: RunConfig) -> spectra.BandDiagram:
    return spectra.band_diagram(
        cfg.cell, cfg.region, cfg.n_bands, k_samples=cfg.k_samples,
        collision_tol=cfg.tol("collision"), tol_close=cfg.tol("close"),
        tol_bnd=cfg.tol("bnd"))


def _closure_error(curve: spectra.DispersionCurve) -> float:
    samples = curve.samples
    return float(abs(samples[0][1] - samples[-1][1]))


def _index_dict(idx: topology.SpectralIndex) -> dict:
    return {"value": int(idx.value), "n_inside": int(idx.n_inside),
            "n_outside": int(idx.n_outside), "min_gap": float(idx.min_gap)}


def _outer_reference(cfg: RunConfig, curves) -> tuple:
    """A reference point outside every loop, with its spectral index."""
    re0, re1, im0, im1 = cfg.region
    for pad in (0.5, 1.0, 1.7, 2.6):
        p = complex(re1 + pad, im0 - pad)
        try:
            if any(topology.winding_number(c, p, cell=cfg.cell).winding != 0
                   for c in curves):
                continue
            idx = topology.spectral_index(cfg.cell, p,
                                          tol_circle=cfg.tol("circle"))
        except PhotonbandError:
            continue
        return p, idx.value
    raise PhotonbandError("no loop-free reference point found outside the "
                          "search region")


# ---------------------------------------------------------------------------
# subcommands


def cmd_band(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    diagram = _trace_diagram(cfg)
    reciprocal = spectra.is_reciprocal(diagram, tol=cfg.tol("reciprocal"))
    csv_rows = []
    bands = []
    for curve, rec in zip(diagram.curves, reciprocal):
        res = [w.real for _, w in curve.samples]
        ims = [w.imag for _, w in curve.samples]
        for k, w in curve.samples:
            csv_rows.append([curve.band_index, float(k),
                             float(w.real), float(w.imag)])
        bands.append({
            "band": int(curve.band_index),
            "n_samples": len(curve.samples),
            "closed": bool(curve.closed),
            "closure_error": _closure_error(curve),
            "reciprocal": bool(rec),
            "omega_re_range": [min(res), max(res)],
            "omega_im_range": [min(ims), max(ims)],
            "samples": [{"k": float(k), "omega": _cjson(w)}
                        for k, w in curve.samples],
        })
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "band",
        "preset": cfg.preset.name if cfg.preset else None,
        "n_bands": cfg.n_bands,
        "k_samples": cfg.k_samples,
        "region": [float(v) for v in cfg.region],
        "ordering_warnings": [str(w) for w in diagram.ordering_warnings],
        "bands": bands,
    }
    _emit_csv(cfg.out_dir / "bands.csv", ["band", "k", "omega_re", "omega_im"],
              csv_rows)
    _emit_json(cfg.out_dir / "bands.json", report, "bands.schema.json")
    _emit_meta(cfg, ["bands.csv", "bands.json"], time.perf_counter() - t0,
               "bands.meta.json")
    print(f"band: wrote {len(csv_rows)} samples across {len(bands)} bands "
          f"to {cfg.out_dir}")
    return EXIT_OK


def cmd_index(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    omega_raw = cfg.option("omega")
    if omega_raw is None:
        raise ConfigError("index needs --omega (or 'omega' in the config)")
    omega = _complex_from_json(omega_raw, "omega") \
        if not isinstance(omega_raw, str) else _parse_complex_token(omega_raw)
    idx = topology.spectral_index(cfg.cell, omega,
                                  tol_circle=cfg.tol("circle"))
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "index",
        "preset": cfg.preset.name if cfg.preset else None,
        "omega": _cjson(omega),
        **_index_dict(idx),
    }
    _emit_json(cfg.out_dir / "report.json", report, "report-index.schema.json")
    _emit_meta(cfg, ["report.json"], time.perf_counter() - t0,
               "report.meta.json")
    print(f"index: Ind({omega:g}) = {idx.value} "
          f"({idx.n_inside} inside / {idx.n_outside} outside, "
          f"min ||lambda|-1| = {idx.min_gap:.3e})")
    return EXIT_OK


def cmd_winding(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    band = int(cfg.option("band", 1))
    if not 1 <= band <= cfg.n_bands:
        raise ConfigError(f"band must be in 1..{cfg.n_bands}")
    diagram = _trace_diagram(cfg)
    curve = diagram.curves[band - 1]
    base_raw = cfg.option("base", "auto")
    if isinstance(base_raw, str) and base_raw.strip().lower() == "auto":
        base_mode = "auto"
        base = topology.interior_point(curve, cell=cfg.cell,
                                       tol_curve=cfg.tol("curve"))
    else:
        base_mode = "explicit"
        base = _complex_from_json(base_raw, "base") \
            if not isinstance(base_raw, str) else _parse_complex_token(base_raw)
    result = topology.winding_number(curve, base, cell=cfg.cell,
                                     tol_curve=cfg.tol("curve"))
    try:
        index_at_base = _index_dict(topology.spectral_index(
            cfg.cell, base, tol_circle=cfg.tol("circle")))
    except OnSpectrum:
        index_at_base = None
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "winding",
        "preset": cfg.preset.name if cfg.preset else None,
        "band": band,
        "base": _cjson(base),
        "base_mode": base_mode,
        "winding": int(result.winding),
        "min_distance": float(result.min_distance),
        "samples_used": int(result.samples_used),
        "index_at_base": index_at_base,
    }
    _emit_json(cfg.out_dir / "report.json", report,
               "report-winding.schema.json")
    _emit_meta(cfg, ["report.json"], time.perf_counter() - t0,
               "report.meta.json")
    print(f"winding: W(band {band}; {base:g}) = {result.winding} "
          f"(min distance to curve {result.min_distance:.3e})")
    return EXIT_OK


def _resolve_bc(cfg: RunConfig) -> edge.BoundaryCondition:
    name = str(cfg.option("bc", "outgoing_vacuum")).strip().lower()
    if name not in _BC_TABLE:
        raise ConfigError(f"unknown boundary condition {name!r}; choose "
                          "outgoing_vacuum, pec, or pmc")
    return _BC_TABLE[name]


def cmd_edge(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    omega_raw = cfg.option("omega")
    if omega_raw is None:
        if cfg.preset and cfg.preset.loop_points:
            omega = cfg.preset.loop_points[min(cfg.preset.loop_points)]
        else:
            raise ConfigError("edge needs --omega (no preset loop point "
                              "available as a default)")
    else:
        omega = _complex_from_json(omega_raw, "omega") \
            if not isinstance(omega_raw, str) \
            else _parse_complex_token(omega_raw)
    bc = _resolve_bc(cfg)
    z_max = float(cfg.option("z_max", 8.0))
    samples_per_cell = int(cfg.option("samples_per_cell", 16))
    if z_max <= 0 or samples_per_cell < 1:
        raise ConfigError("z-max must be positive and samples-per-cell >= 1")

    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "edge",
        "preset": cfg.preset.name if cfg.preset else None,
        "omega": _cjson(omega),
        "bc": bc.kind,
        "found": False,
        "reason": None,
        "side": None, "index_value": None, "n_selected": None,
        "lambdas_selected": None, "alphas": None, "decay_rate": None,
        "boundary_residual": None, "expected_slope": None,
        "fitted_slope": None, "fit_start": None, "ode_residual": None,
        "rank_b": None, "n_modes": None, "degenerate": None, "profile": None,
    }
    files = ["report.json"]
    try:
        mode = edge.find_edge_mode(cfg.cell, omega, bc,
                                   tol_circle=cfg.tol("circle"),
                                   tol_cluster=cfg.tol("cluster"),
                                   tol_bc=cfg.tol("bc"))
    except IndexZero as exc:
        report["reason"] = f"index_zero: {exc}"
        _emit_json(cfg.out_dir / "report.json", report,
                   "report-edge.schema.json")
        _emit_meta(cfg, files, time.perf_counter() - t0, "report.meta.json")
        print(f"edge: Ind({omega:g}) = 0, no edge mode from this mechanism")
        return EXIT_OK

    slope, n0 = edge.decay_fit(mode)
    B = edge.boundary_matrix(mode.eigenpairs, mode.side, bc)
    profile = edge.mode_profile(cfg.cell, mode, z_max,
                                samples_per_cell=samples_per_cell)
    mode_rows = []
    for z, state in profile:
        mode_rows.append([float(z),
                          float(state.E[0].real), float(state.E[0].imag),
                          float(state.E[1].real), float(state.E[1].imag),
                          float(state.H[0].real), float(state.H[0].imag),
                          float(state.H[1].real), float(state.H[1].imag)])
    report.update({
        "found": True,
        "side": mode.side,
        "index_value": int(mode.index_value),
        "n_selected": len(mode.eigenpairs),
        "lambdas_selected": [_cjson(l) for l, _ in mode.eigenpairs],
        "alphas": [_cjson(a) for a in mode.alphas],
        "decay_rate": float(mode.decay_rate),
        "boundary_residual": float(mode.boundary_residual),
        "expected_slope": float(edge.expected_decay_slope(mode)),
        "fitted_slope": float(slope),
        "fit_start": int(n0),
        "ode_residual": float(edge.ode_residual(cfg.cell, mode)),
        "rank_b": int(np.linalg.matrix_rank(B)),
        "n_modes": int(edge.count_edge_modes(cfg.cell, omega, bc,
                                             tol_circle=cfg.tol("circle"),
                                             tol_cluster=cfg.tol("cluster"),
                                             tol_bc=cfg.tol("bc"))),
        "degenerate": bool(mode.degenerate),
        "profile": {"file": "mode.csv", "z_max": z_max,
                    "samples_per_cell": samples_per_cell,
                    "n_rows": len(mode_rows)},
    })
    _emit_csv(cfg.out_dir / "mode.csv",
              ["z", "ex_re", "ex_im", "ey_re", "ey_im",
               "hx_re", "hx_im", "hy_re", "hy_im"], mode_rows)
    files = ["report.json", "mode.csv"]
    _emit_json(cfg.out_dir / "report.json", report, "report-edge.schema.json")
    _emit_meta(cfg, files, time.perf_counter() - t0, "report.meta.json")
    print(f"edge: {mode.side} mode at omega = {omega:g} "
          f"(Ind = {mode.index_value}, decay rate {mode.decay_rate:.4f}, "
          f"boundary residual {mode.boundary_residual:.2e})")
    return EXIT_OK


def _resolve_family(cfg: RunConfig):
    if cfg.preset is None or cfg.preset.name not in _EXAMPLE3_PAIR:
        raise ConfigError("homotopy needs one of the example3 presets "
                          "(the built-in interpolation family)")
    return presets.example3_family(), list(_EXAMPLE3_PAIR)


def cmd_homotopy(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    family, family_names = _resolve_family(cfg)
    t_steps = int(cfg.option("t_steps", 64))
    witness_raw = cfg.option("witness")
    if witness_raw is None:
        if cfg.preset.gap_witness is not None:
            witness, witness_mode = cfg.preset.gap_witness, "preset"
        else:
            witness, witness_mode = "auto", "auto"
    elif isinstance(witness_raw, str) and \
            witness_raw.strip().lower() == "auto":
        witness, witness_mode = "auto", "auto"
    else:
        witness_mode = "explicit"
        witness = _complex_from_json(witness_raw, "witness") \
            if not isinstance(witness_raw, str) \
            else _parse_complex_token(witness_raw)
    track = topology.homotopy_track(family, witness, t_steps,
                                    tol_circle=cfg.tol("circle"))
    entries = [{"t": float(t), "witness": _cjson(g), "index": int(idx.value),
                "min_gap": float(idx.min_gap)} for t, g, idx in track]
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "homotopy",
        "preset": cfg.preset.name,
        "family": family_names,
        "witness_start": entries[0]["witness"],
        "witness_mode": witness_mode,
        "t_steps": t_steps,
        "all_index_zero": all(e["index"] == 0 for e in entries),
        "track": entries,
    }
    _emit_json(cfg.out_dir / "report.json", report,
               "report-homotopy.schema.json")
    _emit_meta(cfg, ["report.json"], time.perf_counter() - t0,
               "report.meta.json")
    print(f"homotopy: tracked witness across {t_steps} steps, "
          f"index stayed {entries[0]['index']} "
          f"(min clearance {min(e['min_gap'] for e in entries):.3e})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _check_runner(checks: list):
    def run(name: str, fn) -> None:
        try:
            passed, details = fn()
        except PhotonbandError as exc:
            passed, details = False, {"error": str(exc)}
        checks.append({"name": name, "passed": bool(passed),
                       "details": details})
    return run


def _verify_gap_index(cfg: RunConfig, h_cell, h_region, gap, rng,
                      n_offaxis: int) -> tuple:
    """Off-axis and in-gap frequencies of a Hermitian cell all get index 0."""
    re0, re1, im0, im1 = h_region
    points = []
    for _ in range(n_offaxis):
        re = rng.uniform(re0 + 0.02, re1)
        im = rng.uniform(0.02, max(abs(im0), abs(im1), 0.3))
        points.append(complex(re, im if rng.uniform() < 0.5 else -im))
    n_gap = 0
    if gap is not None:
        lo, hi = gap
        pad = 0.1 * (hi - lo)
        gap_points = np.linspace(lo + pad, hi - pad, 7)
        points.extend(complex(g, 0.0) for g in gap_points)
        n_gap = len(gap_points)

    def eval_one(p):
        try:
            return int(topology.spectral_index(
                h_cell, p, tol_circle=cfg.tol("circle")).value)
        except OnSpectrum:
            return None

    values = _pmap(eval_one, points, cfg.threads)
    failures = [i for i, v in enumerate(values) if v != 0]
    details = {
        "n_offaxis": n_offaxis,
        "n_gap_points": n_gap,
        "n_failures": len(failures),
        "failures": [_cjson(points[i]) for i in failures[:8]],
    }
    return len(failures) == 0, details


def _verify_index_jump(cfg: RunConfig, curves, rng, samples: int) -> tuple:
    """Ind(inside) - Ind(outside) equals the summed winding at each sample."""
    outer_point, ind_outer = _outer_reference(cfg, curves)
    n_bands_checked = min(3, len(curves))
    per_band = []
    all_ok = True
    for curve in curves[:n_bands_checked]:
        pts = [w for _, w in curve.samples]
        re_lo, re_hi = min(p.real for p in pts), max(p.real for p in pts)
        im_lo, im_hi = min(p.imag for p in pts), max(p.imag for p in pts)
        accepted = []
        attempts = 0
        while len(accepted) < samples and attempts < 400 * samples:
            attempts += 1
            p = complex(rng.uniform(re_lo, re_hi), rng.uniform(im_lo, im_hi))
            try:
                if topology.winding_number(curve, p,
                                           cell=cfg.cell).winding != 0:
                    accepted.append(p)
            except (BasePointOnCurve, RefinementBudgetExceeded):
                continue

        def eval_one(p):
            try:
                ind_in = topology.spectral_index(
                    cfg.cell, p, tol_circle=cfg.tol("circle")).value
                total = sum(topology.winding_number(c, p, cell=cfg.cell).winding
                            for c in curves)
            except (OnSpectrum, BasePointOnCurve,
                    RefinementBudgetExceeded):
                return None
            return bool(ind_in - ind_outer == total)

        outcomes = _pmap(eval_one, accepted, cfg.threads)
        n_rejected = sum(1 for o in outcomes if o is None)
        n_fail = sum(1 for o in outcomes if o is False)
        all_ok = all_ok and n_fail == 0 and len(accepted) == samples
        per_band.append({
            "band": int(curve.band_index),
            "n_samples": len(accepted),
            "n_rejected_on_spectrum": n_rejected,
            "n_failures": n_fail,
        })
    details = {"outer_point": _cjson(outer_point),
               "ind_outer": int(ind_outer), "bands": per_band}
    return all_ok, details


def _edge_report_details(report: dict) -> dict:
    return {
        "band": int(report["band_index"]),
        "bc": report["bc"],
        "n_samples": int(report["n_samples"]),
        "n_pass": int(report["n_pass"]),
        "n_fail": int(report["n_fail"]),
        "n_skipped_other_loop": int(report["n_skipped_other_loop"]),
        "n_rejected_on_spectrum": int(report["n_rejected_on_spectrum"]),
        "worst_boundary_residual": max(
            (float(s["boundary_residual"]) for s in report["samples"]),
            default=0.0),
        "worst_ode_residual": max(
            (float(s["ode_residual"]) for s in report["samples"]),
            default=0.0),
    }


def cmd_verify(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    samples = int(cfg.option("samples", 20))
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    t_steps = int(cfg.option("t_steps", 16))
    rng = np.random.default_rng(cfg.seed)
    checks: list = []
    run = _check_runner(checks)
    hermitian = media.is_hermitian(cfg.cell)

    if hermitian:
        h_cell, h_region = cfg.cell, cfg.region
        expect_gap = cfg.preset is not None and cfg.preset.name in \
            _EXAMPLE3_PAIR
    else:
        diagram = _trace_diagram(cfg)
        curves = diagram.curves

        def chk_closed():
            errs = {str(c.band_index): _closure_error(c) for c in curves}
            ok = all(c.closed for c in curves) and \
                all(e <= cfg.tol("close") for e in errs.values())
            return ok, {"closure_errors": errs, "tol": cfg.tol("close")}
        run("loops_closed", chk_closed)

        def chk_winding_unit():
            windings = {}
            for c in curves:
                p = topology.interior_point(c, cell=cfg.cell,
                                            tol_curve=cfg.tol("curve"))
                windings[str(c.band_index)] = int(topology.winding_number(
                    c, p, cell=cfg.cell).winding)
            ok = all(abs(w) == 1 for w in windings.values())
            return ok, {"windings": windings}
        run("loop_winding_unit", chk_winding_unit)

        run("index_jump",
            lambda: _verify_index_jump(cfg, curves, rng, samples))

        def make_edge_check(bc_name, n_samples, seed_shift):
            def chk():
                report = edge.verify_edge_theorem(
                    cfg.cell, curves[0], n_samples, _BC_TABLE[bc_name],
                    others=curves[1:], seed=cfg.seed + seed_shift,
                    tol_bc=cfg.tol("bc"), tol_decay=cfg.tol("decay"),
                    tol_ode=cfg.tol("ode"))
                chk.last_report = report
                return bool(report["passed"]), _edge_report_details(report)
            return chk

        edge_main = make_edge_check("outgoing_vacuum", samples, 1)
        run("edge_theorem_outgoing", edge_main)
        bc_samples = max(3, samples // 4)
        run("edge_theorem_pec", make_edge_check("pec", bc_samples, 2))
        run("edge_theorem_pmc", make_edge_check("pmc", bc_samples, 3))

        def chk_edge_count():
            report = getattr(edge_main, "last_report", None)
            if report is None:
                raise PhotonbandError("edge theorem check did not run")
            rank2 = [s for s in report["samples"] if s["rank2"]]
            ok = len(rank2) > 0 and all(s["count"] == 1 for s in rank2)
            return ok, {"n_rank2": len(rank2),
                        "n_samples": len(report["samples"])}
        run("edge_count", chk_edge_count)

        partner = cfg.preset.hermitian_partner if cfg.preset else None
        if partner:
            h_preset = presets.get_preset(partner)
            h_cell, h_region = h_preset.cell, h_preset.region
            expect_gap = True
        else:
            h_cell = None

    if h_cell is not None:
        assumption = topology.assumption_check(h_cell, h_region)
        gap = assumption["gap"]
        if expect_gap or assumption["gap_found"]:
            def chk_assumptions():
                details = {
                    "gap_found": bool(assumption["gap_found"]),
                    "gap": None if gap is None else [float(gap[0]),
                                                     float(gap[1])],
                    "on_circle_count": assumption["on_circle_count"],
                    "two_on_circle": assumption["two_on_circle"],
                    "distinct": assumption["distinct"],
                }
                return bool(assumption["passed"]), details
            run("assumptions", chk_assumptions)
        n_offaxis = max(10, samples)
        run("gap_index_zero",
            lambda: _verify_gap_index(cfg, h_cell, h_region, gap, rng,
                                      n_offaxis))

    if cfg.preset is not None and cfg.preset.name in _EXAMPLE3_PAIR:
        def chk_homotopy():
            family, _ = _resolve_family(cfg)
            track = topology.homotopy_track(
                family, cfg.preset.gap_witness or "auto", t_steps,
                tol_circle=cfg.tol("circle"))
            ok = all(idx.value == 0 for _, _, idx in track)
            return ok, {"t_steps": t_steps,
                        "min_clearance": min(float(idx.min_gap)
                                             for _, _, idx in track)}
        run("homotopy_witness", chk_homotopy)

    n_pass = sum(1 for c in checks if c["passed"])
    n_fail = len(checks) - n_pass
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "preset": cfg.preset.name if cfg.preset else None,
        "seed": cfg.seed,
        "samples": samples,
        "checks": checks,
        "n_pass": n_pass,
        "n_fail": n_fail,
        "passed": n_fail == 0,
    }
    _emit_json(cfg.out_dir / "report.json", report,
               "report-verify.schema.json")
    _emit_meta(cfg, ["report.json"], time.perf_counter() - t0,
               "report.meta.json")
    for c in checks:
        print(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['name']}")
    print(f"verify: {n_pass}/{len(checks)} checks passed")
    return EXIT_OK if n_fail == 0 else EXIT_VERIFY


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", choices=presets.PRESET_NAMES,
                        help="built-in cell configuration")
    parser.add_argument("--config", metavar="PATH",
                        help="JSON config file (flags override its values)")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (default: current)")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="random seed for verification sampling")
    parser.add_argument("--k-samples", type=int, dest="k_samples",
                        metavar="N", help="Brillouin zone samples per band")
    parser.add_argument("--region", metavar="RE0,RE1,IM0,IM1",
                        help="frequency search window")
    parser.add_argument("--n-bands", type=int, dest="n_bands", metavar="N",
                        help="number of bands to trace")
    parser.add_argument("--threads", type=int, metavar="N",
                        help="worker threads for verification sweeps")
    for name, (default, what) in DEFAULT_TOLS.items():
        parser.add_argument(f"--tol-{name}", type=float,
                            dest=f"tol_{name}", metavar="X",
                            help=f"{what} (default {default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonband",
        description="Band structures, spectral winding invariants, and "
                    "edge modes of 1D photonic crystals via 4x4 transfer "
                    "matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("band", help="trace a band diagram to CSV/JSON")
    _add_common(p)
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("index", help="spectral index at one frequency")
    _add_common(p)
    p.add_argument("--omega", metavar="RE+IMi",
                   help="frequency, e.g. 0.5+0.0i or 0.5,-0.1")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("winding", help="winding number of a traced band")
    _add_common(p)
    p.add_argument("--band", type=int, metavar="N", help="band index (1-based)")
    p.add_argument("--base", metavar="RE+IMi|auto",
                   help="base point, or 'auto' for an interior point")
    p.set_defaults(func=cmd_winding)

    p = sub.add_parser("edge", help="edge mode at a point-gap frequency")
    _add_common(p)
    p.add_argument("--omega", metavar="RE+IMi",
                   help="frequency (default: a preset loop point)")
    p.add_argument("--bc", choices=sorted(_BC_TABLE),
                   help="boundary condition (default outgoing_vacuum)")
    p.add_argument("--z-max", type=float, dest="z_max", metavar="X",
                   help="profile depth in cell periods (default 8)")
    p.add_argument("--samples-per-cell", type=int, dest="samples_per_cell",
                   metavar="N", help="profile samples per cell (default 16)")
    p.set_defaults(func=cmd_edge)

    p = sub.add_parser("homotopy",
                       help="track a gap witness across the material family")
    _add_common(p)
    p.add_argument("--witness", metavar="RE+IMi|auto",
                   help="gap witness (default: the preset's)")
    p.add_argument("--t-steps", type=int, dest="t_steps", metavar="N",
                   help="interpolation steps (default 64)")
    p.set_defaults(func=cmd_homotopy)

    p = sub.add_parser("verify",
                       help="run the invariant and edge-mode suites")
    _add_common(p)
    p.add_argument("--samples", type=int, metavar="N",
                   help="interior samples per check (default 20)")
    p.add_argument("--t-steps", type=int, dest="t_steps", metavar="N",
                   help="homotopy steps inside verify (default 16)")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return args.func(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhotonbandError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
