"""Built-in scenarios, stored as ``.scn`` text so they double as format examples."""

from __future__ import annotations

from gemengelab.config import Tolerances
from gemengelab.errors import ScenarioError
from gemengelab.scenario.config import ScenarioConfig, load_config

# Spin-1/2 inputs named "<axis><sign>": eigenvectors of the spin component
# along axis 1, 2 or 3, written in the axis-3 basis.
SPIN_INPUTS = {
    "1+": "[1, 1] normalize",
    "1-": "[1, -1] normalize",
    "2+": "[1, i] normalize",
    "2-": "[1, -i] normalize",
    "3+": "[1, 0]",
    "3-": "[0, 1]",
}

_SPIN3 = """\
system 2 {{
    observable {{
        outcome 3+ 0.5 [1, 0]
        outcome 3- -0.5 [0, 1]
    }}
    state {state}
}}
"""

_PRESETS = {
    "stern-gerlach-I": ("1+", """\
# Spin component along axis 3, registered by two ideal detectors.
scenario stern-gerlach-I
pipeline rule2
mode absorbing
""" + _SPIN3 + """\
detector {{
    count 2
    levels 2
}}
check end-state-orthonormality
check probability-reproducibility
check rule2-weights
check criterion-a
check criterion-b
check trace-preservation
"""),
    "stern-gerlach-II": ("1+", """\
# Experiment I followed by an identical second test on the 3+ branch.
scenario stern-gerlach-II
pipeline rule2
mode non-absorbing
""" + _SPIN3 + """\
detector {{
    count 2
}}
chain {{
    select 3+
}}
check von-neumann
check repeatability
check repeat-probability
check rule2-weights
"""),
    "no-go": (None, """\
# Unitary coupling alone: the apparatus operator has the right convex form
# but nothing singles out that decomposition.
scenario no-go
pipeline unitary-only
system 2 {
    observable {
        outcome up 1 [1, 0]
        outcome down -1 [0, 1]
    }
    state [0.6, 0.8]
}
apparatus 3 {
    pointer up [1, 0, 0]
    pointer down [0, 1, 0]
    initial [0, 0, 1]
}
check probability-reproducibility
check kraus-completeness
check criterion-a expect true
check criterion-b expect false
check correlation-erasure
"""),
    "rule2-detector": (None, """\
# The same two-outcome coupling registered by a two-detector array under Rule 2.
scenario rule2-detector
pipeline rule2
mode absorbing
system 2 {
    observable {
        outcome up 1 [1, 0]
        outcome down -1 [0, 1]
    }
    state [0.6, 0.8]
}
detector {
    count 2
    levels 2
    amplitudes [0, 1]
}
check end-state-orthonormality
check probability-reproducibility
check criterion-a expect true
check criterion-b expect true
check rule2-weights
check trace-preservation
check correlation-erasure
"""),
    "cluster-separability": (None, """\
# Two identical particles in disjoint regions of a 32-site chain.
scenario cluster-separability
seed 7
lattice 32 {
    spacing 1
    domain left 0 16
    kernel x position
    kernel hop shift
    kernel bump gaussian-packet 6 2
    kernel noise random 11
    particle psi gaussian 7 2 in left
    particle phi gaussian 24 2 outside left
    statistics both
}
check separation-status
check cluster-separability
check position-additivity
check localization-norm
check localization-idempotence
check superselection
"""),
}

PRESET_NAMES = tuple(_PRESETS)


def preset_text(name: str, input_state: str | None = None) -> str:
    """Scenario source of a preset; ``input_state`` picks a spin input such as ``"3+"``."""
    try:
        default, template = _PRESETS[name]
    except KeyError:
        raise ScenarioError(f"unknown preset '{name}' (known: {', '.join(PRESET_NAMES)})") from None
    if default is None:
        if input_state is not None:
            raise ScenarioError(f"preset '{name}' takes no input override")
        return template
    label = default if input_state is None else input_state
    if label not in SPIN_INPUTS:
        raise ScenarioError(f"unknown spin input '{label}' (known: {', '.join(SPIN_INPUTS)})")
    return template.format(state=SPIN_INPUTS[label])


def preset(name: str, input_state: str | None = None, tolerances: Tolerances | None = None,
           **kwargs) -> ScenarioConfig:
    return load_config(preset_text(name, input_state), tolerances, **kwargs)
