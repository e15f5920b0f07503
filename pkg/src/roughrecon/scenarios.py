"""Preset scenario configurations for the published numerical experiments."""

from __future__ import annotations

import copy

_COMMON = {
    "domain_length": 16.0,
    "upper": {"eps_r": 1.0, "mu_r": 1.0, "sigma": 0.0},
    "lower": {"eps_r": 4.0, "mu_r": 1.0, "sigma": 1e-5},
    "wave": {"theta": 0.0, "taper": 8.0},
    "receivers": {"start": -10.0, "stop": 10.0, "step": "10 cm", "height": 4.25, "include_endpoint": True},
    "mesh_factor": 2.0,
}

PRESETS = {
    "convergence": {
        "name": "convergence",
        "surface": {"kind": "gaussian", "corr_length": 0.7, "height_std": 0.07, "seed": 0},
        "schedule": {"start": "325 MHz", "step": "25 MHz", "stop": "900 MHz"},
        "inverse": {"n_splines": 25},
        "noise_level": "5 %",
        "profile_frequencies": ["350 MHz", "800 MHz", "900 MHz"],
    },
    "single_vs_multi": {
        "name": "single_vs_multi",
        "surface": {"kind": "gaussian", "corr_length": 0.55, "height_std": 0.06, "seed": 0},
        "schedule": {"start": "400 MHz", "step": "25 MHz", "stop": "600 MHz"},
        "receivers": {"start": -10.0, "stop": 10.0, "step": "20 cm", "height": 4.25, "include_endpoint": True},
        "inverse": {"n_splines": 20},
        "noise_level": 0.0,
        "compare_single_frequency": True,
    },
    "frequency_step": {
        "name": "frequency_step",
        "surface": {"kind": "gaussian", "corr_length": 0.4, "height_std": 0.07, "seed": 0},
        "schedule": {"start": "300 MHz", "step": "10 MHz", "stop": "600 MHz"},
        "inverse": {"n_splines": 17},
        "noise_level": 0.0,
        "sweep": {"axis": "frequency_step", "values": ["10 MHz", "20 MHz", "50 MHz", "150 MHz", "300 MHz"]},
    },
    "sharp": {
        "name": "sharp",
        "surface": {"kind": "triangular"},
        "schedule": {"start": "400 MHz", "step": "20 MHz", "stop": "800 MHz"},
        "inverse": {"n_splines": 18},
        "noise_level": 0.0,
        "compare_single_frequency": True,
    },
    "noise": {
        "name": "noise",
        "surface": {"kind": "gaussian", "corr_length": 0.5, "height_std": 0.05, "seed": 0},
        "schedule": {"start": "425 MHz", "step": "25 MHz", "stop": "675 MHz"},
        "inverse": {"n_splines": 18},
        "sweep": {
            "axis": "noise_level",
            "values": ["3 %", "5 %", "7 %", "10 %", "12 %", "15 %", "20 %", "25 %", "30 %", "35 %", "40 %", "45 %", "50 %"],
        },
    },
    "receivers": {
        "name": "receivers",
        "surface": {"kind": "gaussian", "corr_length": 0.7, "height_std": 0.08, "seed": 0},
        "schedule": {"start": "300 MHz", "step": "20 MHz", "stop": "500 MHz"},
        "inverse": {"n_splines": 18},
        "noise_level": 0.0,
        "sweep": {
            "axis": "receiver_step",
            "values": ["2.5 cm", "5 cm", "7.5 cm", "10 cm", "15 cm", "20 cm", "30 cm", "40 cm", "50 cm", "60 cm", "80 cm", "100 cm"],
        },
    },
}


def preset(name: str) -> dict:
    """JSON-ready scenario dictionary for a named preset."""
    if name not in PRESETS:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(PRESETS)}")
    cfg = copy.deepcopy(_COMMON)
    for key, val in copy.deepcopy(PRESETS[name]).items():
        cfg[key] = val
    return cfg
