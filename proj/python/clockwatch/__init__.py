"""Clock-ensemble simulation and GNSS time-attack detection.

Thin convenience layer over the compiled extension: configs travel as plain
dicts mirroring the JSON schema the CLI uses.
"""

import json

from ._core import (  # noqa: F401
    __version__,
    allan_variance,
    classify,
    deterministic_phase,
    fit_noise_coefficients,
    hadamard_variance,
    phase_to_frequency,
    preset_names,
    preset_json,
    process_noise_block,
    transition_block,
)
from . import _core


def preset(name):
    """Named scenario preset as a dict."""
    return json.loads(_core.preset_json(name))


def simulate(config):
    """Simulate a scenario config (dict or JSON text) into numpy trace arrays."""
    if not isinstance(config, str):
        config = json.dumps(config)
    return _core.simulate(config)


def attack_offset(config, t):
    """Injected GNSS offset at time t for the config's attack profile."""
    if not isinstance(config, str):
        config = json.dumps(config)
    return _core.attack_offset(config, t)


def run_detection(config, benign_config, multiplier=6.0):
    """Simulate `config`, calibrate on `benign_config`, run the dual test.

    Returns a dict with the per-epoch estimate series, alarm flags,
    classifications, run metrics and the calibration used.
    """
    if not isinstance(config, str):
        config = json.dumps(config)
    if not isinstance(benign_config, str):
        benign_config = json.dumps(benign_config)
    return _core.run_detection(config, benign_config, multiplier)
