"""Named cell configurations with curated search windows.

Each preset bundles a unit cell with the frequency region that holds its
first few bands, a witness frequency inside the first spectral gap of the
(Hermitian) cell, and a point inside each traced loop for the non-Hermitian
case.  The numbers were frozen from dense development scans and are
cross-checked against freshly computed band edges in the test suite, so a
drift in the numerics cannot silently invalidate them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import media
from .errors import ConfigError
from .media import HomotopyFamily, UnitCell

PRESET_NAMES = ("vacuum", "example3-hermitian", "example3-nonhermitian",
                "afa-custom")

# Three-layer A(phi1) | F | A(phi2) stack used throughout: the anisotropic
# layers are rotated against each other (phi2 - phi1 = 0.8) and the middle
# layer is gyrotropic, which together break spectral reciprocity.
_AFA_BASE = dict(delta=6.0, phi1=0.0, phi2=0.8, alpha=0.5, beta=0.5, L=0.25)


@dataclass(frozen=True)
class Preset:
    """A unit cell plus the curated numbers its workflows need."""

    name: str
    cell: UnitCell
    region: tuple  # (re0, re1, im0, im1) frequency search window
    n_bands: int
    gap_witness: Optional[complex] = None  # inside the first Hermitian gap
    loop_points: dict = field(default_factory=dict)  # band -> interior point
    hermitian_partner: Optional[str] = None
    params: dict = field(default_factory=dict)  # recorded in meta output


def _example3_params(eps0: complex) -> dict:
    p = dict(_AFA_BASE)
    p["eps0_re"] = float(eps0.real)
    p["eps0_im"] = float(eps0.imag)
    return p


def get_preset(name: str, afa_params: Optional[dict] = None) -> Preset:
    """Look up a preset by name; afa-custom builds from ``afa_params``."""
    if name == "vacuum":
        return Preset(
            name=name,
            cell=media.vacuum_cell(),
            region=(0.0, 6.5, -0.5, 0.5),
            n_bands=2,
            params={"kind": "vacuum"},
        )
    if name == "example3-hermitian":
        eps0 = 13.0 + 0.0j
        return Preset(
            name=name,
            cell=media.afa_cell(eps0, **{k: _AFA_BASE[k] for k in
                                         ("delta", "phi1", "phi2",
                                          "alpha", "beta", "L")}),
            region=(0.0, 3.4, -0.5, 0.5),
            n_bands=5,
            # first gap is (1.2140, 1.5582); the witness sits mid-gap
            gap_witness=1.386 + 0.0j,
            hermitian_partner=name,
            params=_example3_params(eps0),
        )
    if name == "example3-nonhermitian":
        eps0 = 13.0 + 5.0j
        return Preset(
            name=name,
            cell=media.afa_cell(eps0, **{k: _AFA_BASE[k] for k in
                                         ("delta", "phi1", "phi2",
                                          "alpha", "beta", "L")}),
            region=(0.0, 3.6, -1.2, 1.2),
            n_bands=5,
            gap_witness=1.386 + 0.0j,
            # one point inside each traced loop (loops are thin crescents;
            # these sit between the +k and -k halves, not at the centroid)
            loop_points={
                1: 0.6505 - 0.0998j,
                2: 1.0823 - 0.2189j,
                3: 1.4751 - 0.2631j,
                4: 2.4988 - 0.6240j,
                5: 3.0366 - 0.4074j,
            },
            hermitian_partner="example3-hermitian",
            params=_example3_params(eps0),
        )
    if name == "afa-custom":
        if not afa_params:
            raise ConfigError("afa-custom needs explicit stack parameters")
        try:
            eps0 = complex(float(afa_params.get("eps0_re", 13.0)),
                           float(afa_params.get("eps0_im", 0.0)))
            kwargs = {k: float(afa_params.get(k, _AFA_BASE[k]))
                      for k in ("delta", "phi1", "phi2", "alpha", "beta", "L")}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad afa-custom parameter: {exc}") from exc
        region = tuple(float(v) for v in afa_params.get(
            "region", (0.0, 3.6, -1.2, 1.2)))
        if len(region) != 4:
            raise ConfigError("region must be re0,re1,im0,im1")
        params = dict(kwargs)
        params["eps0_re"], params["eps0_im"] = eps0.real, eps0.imag
        return Preset(
            name=name,
            cell=media.afa_cell(eps0, **kwargs),
            region=region,
            n_bands=int(afa_params.get("n_bands", 5)),
            params=params,
        )
    raise ConfigError(
        f"unknown preset {name!r}; choose one of {', '.join(PRESET_NAMES)}")


def example3_family() -> HomotopyFamily:
    """The Hermitian-to-lossy interpolation of the three-layer example."""
    return HomotopyFamily(
        cell_start=get_preset("example3-hermitian").cell,
        cell_end=get_preset("example3-nonhermitian").cell,
    )
