"""Render observables and measurement setups back into ``.scn`` text."""

from __future__ import annotations

import numpy as np

from gemengelab.bcl import BCLSetup
from gemengelab.hilbert import as_array
from gemengelab.observables import SharpObservable


def format_number(z: complex) -> str:
    """Shortest round-tripping literal: ``0.5``, ``-2i`` or ``0.5+0.25i``."""
    z = complex(z)
    re, im = repr(float(z.real)), repr(float(z.imag))
    if z.imag == 0:
        return re
    if z.real == 0:
        return f"{im}i"
    sign = "" if im.startswith("-") else "+"
    return f"{re}{sign}{im}i"


def format_vector(v) -> str:
    return "[" + ", ".join(format_number(z) for z in as_array(v).reshape(-1)) + "]"


def _label(label: str) -> str:
    if label and all(ch.isalnum() or ch in "_.+-" for ch in label):
        return label
    return f'"{label}"'


def format_observable(obs: SharpObservable, indent: str = "    ") -> str:
    lines = ["observable {"]
    for label, value, fam in zip(obs.labels, obs.values, obs.families):
        vecs = " ".join(format_vector(row) for row in fam)
        lines.append(f"{indent}outcome {_label(label)} {format_number(value)} {vecs}")
    lines.append("}")
    return "\n".join(lines)


def format_setup(setup: BCLSetup, state, name: str = "exported") -> str:
    """A complete unitary-only scenario for ``setup`` with input ``state``."""
    obs = setup.observable
    body = "\n".join("    " + line for line in format_observable(obs).splitlines())
    out = [f"scenario {_label(name)}", "pipeline unitary-only",
           f"system {setup.system_dim} {{", body, f"    state {format_vector(state)}", "}",
           f"apparatus {setup.apparatus_dim} {{"]
    for label, ptr in zip(obs.labels, setup.pointer_states):
        out.append(f"    pointer {_label(label)} {format_vector(ptr)}")
    out.append(f"    initial {format_vector(setup.apparatus_initial)}")
    out.append("}")
    out.append("end-states {")
    for label, ends in zip(obs.labels, setup.end_states):
        out.append(f"    outcome {_label(label)} " + " ".join(format_vector(r) for r in np.atleast_2d(ends)))
    out.append("}")
    return "\n".join(out) + "\n"
