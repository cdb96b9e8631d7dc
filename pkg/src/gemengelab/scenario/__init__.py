"""Declarative scenario files, presets and the runner behind the command line."""

from gemengelab.scenario.checks import CHECKS
from gemengelab.scenario.config import ScenarioConfig, build_config, load_config, load_file
from gemengelab.scenario.parser import parse, tokenize
from gemengelab.scenario.presets import PRESET_NAMES, SPIN_INPUTS, preset, preset_text
from gemengelab.scenario.runner import run_scenario
from gemengelab.scenario.writer import format_observable, format_setup

__all__ = [
    "CHECKS",
    "PRESET_NAMES",
    "SPIN_INPUTS",
    "ScenarioConfig",
    "build_config",
    "format_observable",
    "format_setup",
    "load_config",
    "load_file",
    "parse",
    "preset",
    "preset_text",
    "run_scenario",
    "tokenize",
]
