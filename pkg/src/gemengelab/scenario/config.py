"""Scenario schema: turns a parsed ``.scn`` tree into a validated ScenarioConfig.

Recognised top-level statements::

    scenario <name>
    seed <int>
    pipeline unitary-only | rule2
    mode absorbing | non-absorbing
    tolerance <key> <value>
    system <dim> { observable {...} | observable pauli <x|y|z> | observable matrix [[...]]
                   state <vector> [normalize] | state-matrix <matrix> }
    apparatus <dim> { pointer <label> <vector> [normalize] ...  initial <vector> [normalize] }
    detector { count <N>  levels <L>  amplitudes <vector> [normalize] }
    end-states { outcome <label> <vector> [<vector> ...] [normalize] }
    chain { select <label> }
    lattice <N> { spacing <h>  domain <name> <lo> <hi>  kernel <name> <generator> ...
                  particle <name> gaussian <center> <width> (in|outside) <domain>
                  statistics boson|fermion|both }
    check <name> [expect true|false] [tol <value>]

Inside ``observable { }``: ``outcome <label> <value> <vector> [<vector> ...] [normalize]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gemengelab.bcl import BCLSetup
from gemengelab.config import Tolerances, default_tolerances
from gemengelab.detector import DetectorArrayModel, DetectorMode, build_detector_setup
from gemengelab.errors import GemengeLabError, ScenarioError, ScenarioParseError
from gemengelab.hilbert import StateOperator, StateVector
from gemengelab.observables import SharpObservable, pauli
from gemengelab.scenario.parser import Node, parse

PIPELINES = ("unitary-only", "rule2")
KERNEL_GENERATORS = ("position", "shift", "gaussian-packet", "random", "matrix")


@dataclass(frozen=True)
class CheckSpec:
    name: str
    expect: bool = True
    tol: float | None = None
    line: int = 0


@dataclass(frozen=True, eq=False)
class ApparatusSpec:
    pointer_labels: tuple[str, ...]
    pointer_states: tuple[StateVector, ...]
    initial: StateVector


@dataclass(frozen=True, eq=False)
class KernelSpec:
    name: str
    generator: str
    params: tuple = ()


@dataclass(frozen=True, eq=False)
class ParticleSpec:
    name: str
    center: float
    width: float
    inside: bool
    domain: str


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    n_sites: int
    spacing: float = 1.0
    domains: dict = field(default_factory=dict)
    kernels: tuple[KernelSpec, ...] = ()
    particles: tuple[ParticleSpec, ...] = ()
    statistics: tuple[int, ...] = (1, -1)


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str
    seed: int = 0
    pipeline: str = "unitary-only"
    mode: DetectorMode = DetectorMode.ABSORBING
    observable: SharpObservable | None = None
    input_state: StateVector | StateOperator | None = None
    apparatus: ApparatusSpec | None = None
    detector: DetectorArrayModel | None = None
    end_states: tuple[np.ndarray, ...] | None = None
    chain_select: str | None = None
    lattice: LatticeSpec | None = None
    setup: BCLSetup | None = None
    checks: tuple[CheckSpec, ...] = ()
    tolerances: Tolerances = field(default_factory=default_tolerances)

    @property
    def has_measurement(self) -> bool:
        return self.observable is not None


def _bool(node: Node, word) -> bool:
    if word in (True, "true", "yes", 1):
        return True
    if word in (False, "false", "no", 0):
        return False
    raise node.error(f"expected true/false, got {word!r}")


def _number(node: Node, value, kind=float):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if kind is int and (not float(value).is_integer()):
            raise node.error(f"expected an integer, got {value!r}")
        return kind(value)
    raise node.error(f"expected a number, got {value!r}")


def _arg(node: Node, i: int, what: str):
    if len(node.args) <= i:
        raise node.error(f"'{node.keyword}' needs {what}")
    return node.args[i]


def _vector(node: Node, value, normalize: bool) -> StateVector:
    if not isinstance(value, list) or not value or any(isinstance(v, (list, str)) for v in value):
        raise node.error("expected a vector like [1, 0.5+0.5i]")
    arr = np.array(value, dtype=complex)
    try:
        return StateVector.normalized(arr) if normalize else StateVector(arr)
    except GemengeLabError as exc:
        raise node.error(str(exc)) from None


def _matrix(node: Node, value) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise node.error("expected a matrix like [[1, 0], [0, 1]]")
    if len({len(r) for r in value}) != 1:
        raise node.error("matrix rows differ in length")
    return np.array(value, dtype=complex)


def _strip_normalize(node: Node) -> tuple[list, bool]:
    args = list(node.args)
    norm = bool(args) and args[-1] == "normalize"
    return (args[:-1] if norm else args), norm


def _observable(node: Node, dim: int, tol: Tolerances) -> SharpObservable:
    try:
        if node.args and node.args[0] == "pauli":
            axis = str(_arg(node, 1, "an axis"))
            if axis not in ("x", "y", "z") or dim != 2:
                raise node.error("pauli observables need axis x, y or z on a 2-level system")
            # eigh sorts ascending; list the +1 eigenvector first
            _, vecs = np.linalg.eigh(pauli(axis))
            return SharpObservable.from_basis(vecs[:, ::-1].T, ("+", "-"), (1.0, -1.0), tol)
        if node.args and node.args[0] == "matrix":
            return SharpObservable.from_hermitian(_matrix(node, _arg(node, 1, "a matrix")), tol=tol)
        labels, values, fams = [], [], []
        for child in node.children:
            if child.keyword != "outcome":
                raise child.error(f"unknown statement '{child.keyword}' in observable")
            args, norm = _strip_normalize(child)
            if len(args) < 3:
                raise child.error("outcome needs a label, a value and at least one vector")
            labels.append(str(args[0]))
            values.append(_number(child, args[1]))
            fams.append(np.array([_vector(child, v, norm).data for v in args[2:]]))
        if not labels:
            raise node.error("observable declares no outcomes")
        obs = SharpObservable.from_families(labels, values, fams, tol)
    except ScenarioParseError:
        raise
    except GemengeLabError as exc:
        raise node.error(str(exc)) from None
    except ValueError as exc:
        raise node.error(str(exc)) from None
    if obs.dim != dim:
        raise node.error(f"observable acts on dim {obs.dim}, system declared dim {dim}")
    return obs


def _lattice(node: Node) -> LatticeSpec:
    n = _number(node, _arg(node, 0, "a site count"), int)
    if n < 1:
        raise node.error("lattice needs at least one site")
    spacing, domains, kernels, particles = 1.0, {}, [], []
    stats = (1, -1)
    for c in node.children:
        if c.keyword == "spacing":
            spacing = _number(c, _arg(c, 0, "a value"))
        elif c.keyword == "domain":
            name = str(_arg(c, 0, "a name"))
            lo, hi = _number(c, _arg(c, 1, "a start index"), int), _number(c, _arg(c, 2, "an end index"), int)
            if not 0 <= lo <= hi <= n:
                raise c.error(f"domain range [{lo}, {hi}) outside lattice of {n} sites")
            domains[name] = tuple(range(lo, hi))
        elif c.keyword == "kernel":
            name, gen = str(_arg(c, 0, "a name")), str(_arg(c, 1, "a generator"))
            if gen not in KERNEL_GENERATORS:
                raise c.error(f"unknown kernel generator '{gen}' (known: {', '.join(KERNEL_GENERATORS)})")
            params = tuple(c.args[2:])
            if gen == "matrix":
                mat = _matrix(c, _arg(c, 2, "a matrix"))
                if mat.shape != (n, n):
                    raise c.error(f"kernel matrix has shape {mat.shape}, lattice has {n} sites")
                params = (mat,)
            kernels.append(KernelSpec(name, gen, params))
        elif c.keyword == "particle":
            if len(c.args) != 6 or c.args[1] != "gaussian" or c.args[4] not in ("in", "outside"):
                raise c.error("expected: particle <name> gaussian <center> <width> in|outside <domain>")
            particles.append(ParticleSpec(str(c.args[0]), _number(c, c.args[2]), _number(c, c.args[3]),
                                          c.args[4] == "in", str(c.args[5])))
        elif c.keyword == "statistics":
            word = _arg(c, 0, "boson, fermion or both")
            stats = {"boson": (1,), "fermion": (-1,), "both": (1, -1)}.get(word)
            if stats is None:
                raise c.error(f"unknown statistics '{word}'")
        else:
            raise c.error(f"unknown statement '{c.keyword}' in lattice")
    for p in particles:
        if p.domain not in domains:
            raise node.error(f"particle '{p.name}' refers to undeclared domain '{p.domain}'")
    return LatticeSpec(n, spacing, domains, tuple(kernels), tuple(particles), stats)


def build_config(root: Node, tolerances: Tolerances | None = None, overrides: dict | None = None,
                 seed: int | None = None) -> ScenarioConfig:
    """Validate a parsed tree; errors carry the offending line and column.

    ``overrides`` (tolerance key to value) and ``seed`` win over the file.
    """
    from gemengelab.scenario.checks import CHECKS

    tol = default_tolerances() if tolerances is None else tolerances
    fields: dict = {"checks": []}
    system_node = apparatus_node = detector_node = ends_node = None
    for node in root.children:
        kw = node.keyword
        if kw == "scenario":
            fields["name"] = str(_arg(node, 0, "a name"))
        elif kw == "seed":
            fields["seed"] = _number(node, _arg(node, 0, "an integer"), int)
        elif kw == "pipeline":
            p = _arg(node, 0, "unitary-only or rule2")
            if p not in PIPELINES:
                raise node.error(f"unknown pipeline '{p}'")
            fields["pipeline"] = p
        elif kw == "mode":
            try:
                fields["mode"] = DetectorMode(_arg(node, 0, "a detector mode"))
            except ValueError:
                raise node.error(f"unknown detector mode '{node.args[0]}'") from None
        elif kw == "tolerance":
            key = str(_arg(node, 0, "a tolerance key"))
            try:
                tol = tol.replace(**{key: _number(node, _arg(node, 1, "a value"))})
            except KeyError as exc:
                raise node.error(str(exc.args[0])) from None
        elif kw == "system":
            system_node = node
        elif kw == "apparatus":
            apparatus_node = node
        elif kw == "detector":
            detector_node = node
        elif kw == "end-states":
            ends_node = node
        elif kw == "chain":
            sel = node.first("select")
            if sel is None:
                raise node.error("chain needs 'select <label>'")
            fields["chain_select"] = str(_arg(sel, 0, "an outcome label"))
        elif kw == "lattice":
            fields["lattice"] = _lattice(node)
        elif kw == "check":
            name = str(_arg(node, 0, "a check name"))
            if name not in CHECKS:
                raise node.error(f"unknown check '{name}'")
            expect, ctol, i = True, None, 1
            while i < len(node.args):
                key = node.args[i]
                if key == "expect":
                    expect = _bool(node, _arg(node, i + 1, "true or false"))
                elif key == "tol":
                    ctol = _number(node, _arg(node, i + 1, "a tolerance"))
                else:
                    raise node.error(f"unknown check option '{key}'")
                i += 2
            fields["checks"].append(CheckSpec(name, expect, ctol, node.line))
        else:
            raise node.error(f"unknown statement '{kw}'")
    if "name" not in fields:
        raise ScenarioParseError("missing 'scenario <name>' statement", 1, 1)
    if overrides:
        tol = tol.replace(**overrides)
    if seed is not None:
        fields["seed"] = int(seed)

    if system_node is not None:
        dim = _number(system_node, _arg(system_node, 0, "a dimension"), int)
        obs_node = system_node.first("observable")
        if obs_node is None:
            raise system_node.error("system needs an observable")
        obs = _observable(obs_node, dim, tol)
        fields["observable"] = obs
        st = system_node.first("state")
        stm = system_node.first("state-matrix")
        if st is not None:
            args, norm = _strip_normalize(st)
            vec = _vector(st, _arg(st, 0, "a vector") if args else None, norm)
            if vec.dim != dim:
                raise st.error(f"state has dim {vec.dim}, system declared dim {dim}")
            fields["input_state"] = vec
        elif stm is not None:
            mat = _matrix(stm, _arg(stm, 0, "a matrix"))
            try:
                fields["input_state"] = StateOperator(mat, tol=tol)
            except GemengeLabError as exc:
                raise stm.error(str(exc)) from None
            if mat.shape[0] != dim:
                raise stm.error(f"state has dim {mat.shape[0]}, system declared dim {dim}")
        else:
            raise system_node.error("system needs a state or state-matrix")
        if (apparatus_node is None) == (detector_node is None):
            raise system_node.error("declare exactly one of 'apparatus' or 'detector'")
        if apparatus_node is not None:
            d_a = _number(apparatus_node, _arg(apparatus_node, 0, "a dimension"), int)
            pointers = {}
            init = None
            for c in apparatus_node.children:
                args, norm = _strip_normalize(c)
                if c.keyword == "pointer":
                    pointers[str(_arg(c, 0, "a label"))] = (c, _vector(c, args[1] if len(args) > 1 else None, norm))
                elif c.keyword == "initial":
                    init = _vector(c, args[0] if args else None, norm)
                else:
                    raise c.error(f"unknown statement '{c.keyword}' in apparatus")
            if init is None:
                raise apparatus_node.error("apparatus needs an initial vector")
            if set(pointers) != set(obs.labels):
                raise apparatus_node.error(
                    f"pointer labels {sorted(pointers)} do not match outcome labels {list(obs.labels)}")
            for c, v in pointers.values():
                if v.dim != d_a:
                    raise c.error(f"pointer state has dim {v.dim}, apparatus declared dim {d_a}")
            if init.dim != d_a:
                raise apparatus_node.error(f"initial vector has dim {init.dim}, apparatus declared dim {d_a}")
            fields["apparatus"] = ApparatusSpec(obs.labels, tuple(pointers[l][1] for l in obs.labels), init)
        else:
            kw = {c.keyword: c for c in detector_node.children}
            unknown = set(kw) - {"count", "levels", "amplitudes"}
            if unknown:
                raise detector_node.error(f"unknown statement(s) in detector: {', '.join(sorted(unknown))}")
            count = _number(detector_node, _arg(kw["count"], 0, "a count"), int) if "count" in kw else len(obs.labels)
            levels = _number(kw["levels"], _arg(kw["levels"], 0, "a count"), int) if "levels" in kw else 2
            amps = None
            if "amplitudes" in kw:
                args, norm = _strip_normalize(kw["amplitudes"])
                amps = tuple(_vector(kw["amplitudes"], args[0] if args else None, norm).data)
            try:
                fields["detector"] = DetectorArrayModel(count, levels, amps)
            except GemengeLabError as exc:
                raise detector_node.error(str(exc)) from None
            if count != len(obs.labels):
                raise detector_node.error(f"{count} detectors for {len(obs.labels)} outcomes")
        if ends_node is not None:
            ends = {}
            for c in ends_node.children:
                args, norm = _strip_normalize(c)
                if c.keyword != "outcome" or len(args) < 2:
                    raise c.error("expected: outcome <label> <vector> [<vector> ...]")
                ends[str(args[0])] = np.array([_vector(c, v, norm).data for v in args[1:]])
            if set(ends) != set(obs.labels):
                raise ends_node.error("end-states must list every outcome label")
            fields["end_states"] = tuple(ends[l] for l in obs.labels)
        where = ends_node or apparatus_node or detector_node
        try:
            if "detector" in fields:
                setup = build_detector_setup(fields["detector"], obs, fields.get("end_states"), tol)
            else:
                app = fields["apparatus"]
                setup = BCLSetup(obs, app.pointer_states, app.initial, fields.get("end_states") or obs.families)
                setup.validate(tol)
        except GemengeLabError as exc:
            raise where.error(str(exc)) from None
        fields["setup"] = setup
    elif apparatus_node or detector_node or ends_node:
        raise (apparatus_node or detector_node or ends_node).error("apparatus declared without a system")

    if fields.get("chain_select") is not None:
        if "observable" not in fields or fields["chain_select"] not in fields["observable"].labels:
            raise ScenarioParseError(f"chain selects unknown outcome '{fields['chain_select']}'")

    checks = fields.pop("checks")
    seen = set()
    for c in checks:
        if c.name in seen:
            raise ScenarioParseError(f"check '{c.name}' declared twice", c.line)
        seen.add(c.name)
        problem = CHECKS[c.name].requires(fields)
        if problem:
            raise ScenarioParseError(f"check '{c.name}' {problem}", c.line)
    if fields.get("pipeline") == "rule2" and "detector" not in fields:
        raise ScenarioParseError("pipeline rule2 needs a detector block")
    return ScenarioConfig(checks=tuple(checks), tolerances=tol, **fields)


def load_config(text: str, tolerances: Tolerances | None = None, **kwargs) -> ScenarioConfig:
    return build_config(parse(text), tolerances, **kwargs)


def load_file(path, tolerances: Tolerances | None = None, **kwargs) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return load_config(fh.read(), tolerances, **kwargs)


__all__ = ["ScenarioConfig", "CheckSpec", "LatticeSpec", "build_config", "load_config", "load_file", "ScenarioError"]
