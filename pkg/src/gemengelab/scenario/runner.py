"""Execute a ScenarioConfig and assemble its JSON report."""

from __future__ import annotations

import dataclasses
import datetime as _dt
from functools import cached_property

import numpy as np

from gemengelab import __version__
from gemengelab.bcl import (
    BCLSetup,
    apparatus_state,
    build_coupling,
    objectification_check,
    premeasure,
    state_transformer,
)
from gemengelab.detector import dephase, rule2_transform
from gemengelab.errors import GemengeLabError, ScenarioError
from gemengelab.hilbert import StateVector, as_state_operator
from gemengelab.locality import (
    LatticeSpace,
    expectation,
    gaussian_packet,
    gaussian_packet_kernel,
    position_kernel,
    shift_kernel,
)
from gemengelab.sampling import random_density, random_hermitian, rng_from
from gemengelab.scenario.checks import CHECKS
from gemengelab.scenario.config import ScenarioConfig
from gemengelab.serialize import matrix_to_json, vector_to_json


class Pipeline:
    """Lazily computed intermediate objects of one scenario run."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.tol = config.tolerances
        self.seed = config.seed

    @property
    def setup(self) -> BCLSetup:
        return self.config.setup

    @property
    def input_state(self):
        return self.config.input_state

    @cached_property
    def coupling(self):
        return build_coupling(self.setup, self.tol)

    @cached_property
    def result(self):
        return premeasure(self.setup, self.input_state, self.tol)

    @cached_property
    def rule2(self):
        return rule2_transform(self.result, self.config.detector, self.config.mode, self.tol)

    @cached_property
    def apparatus(self):
        """Apparatus description the pipeline hands to the objectification check."""
        if self.config.pipeline == "rule2":
            return self.rule2.apparatus_gemenge()
        return apparatus_state(self.result)

    @cached_property
    def verdict(self):
        return objectification_check(self.result, self.apparatus, self.tol)

    @cached_property
    def transformer(self):
        return state_transformer(self.setup, self.tol)

    @cached_property
    def dephased(self) -> np.ndarray:
        return dephase(self.result)

    def random_states(self, count: int) -> list:
        rng = rng_from(self.seed)
        return [random_density(self.setup.system_dim, rng) for _ in range(count)]

    @cached_property
    def chain(self) -> dict:
        """Repeat the identical coupling on the selected branch of the first one."""
        k = self.setup.observable.index(self.config.chain_select)
        first = self.result.conditional_states[k]
        if first is None:
            raise ScenarioError(f"selected outcome '{self.config.chain_select}' has probability 0")
        second = premeasure(self.setup, first, self.tol)
        t = self.input_state.projector().data
        sel = [self.config.chain_select]
        st = self.transformer
        kraus_p = st.probability(sel, st.apply(sel, t).data) / st.probability(sel, t)
        out = {
            "select": self.config.chain_select,
            "repeat_probability": second.probabilities[k],
            "repeat_probability_kraus": kraus_p,
            "second_stage_probabilities": list(second.probabilities),
            "fired": len(second.support()),
        }
        if self.config.pipeline == "rule2":
            out["second_stage"] = rule2_transform(second, self.config.detector, self.config.mode, self.tol).to_dict()
        return out

    @property
    def statistics(self) -> tuple[int, ...]:
        return self.config.lattice.statistics

    @cached_property
    def lattice(self) -> dict:
        spec = self.config.lattice
        space = LatticeSpace.uniform(spec.n_sites, spec.spacing)
        domains = {name: space.domain(idx) for name, idx in spec.domains.items()}
        kernels = []
        for i, k in enumerate(spec.kernels):
            if k.generator == "position":
                a = position_kernel(space)
            elif k.generator == "shift":
                a = shift_kernel(space, int(k.params[0]) if k.params else 1)
            elif k.generator == "gaussian-packet":
                if len(k.params) != 2:
                    raise ScenarioError(f"kernel '{k.name}': gaussian-packet needs a center and a width")
                a = gaussian_packet_kernel(space, float(k.params[0]), float(k.params[1]))
            elif k.generator == "random":
                seed = int(k.params[0]) if k.params else self.seed * 1009 + i
                a = random_hermitian(spec.n_sites, rng_from(seed))
            else:
                a = k.params[0]
            kernels.append((k.name, a))
        particles, pdoms = [], []
        for p in spec.particles:
            dom = domains[p.domain] if p.inside else domains[p.domain].complement()
            try:
                vec = gaussian_packet(space, p.center, p.width, domain=dom)
            except GemengeLabError as exc:
                raise ScenarioError(f"particle '{p.name}': {exc}") from None
            particles.append((p.name, vec))
            pdoms.append(dom)
        return {"space": space, "domains": domains, "kernels": kernels,
                "particles": particles, "particle_domains": pdoms}

    def results(self) -> dict:
        cfg = self.config
        out: dict = {}
        if cfg.observable is not None:
            out["outcomes"] = list(cfg.observable.labels)
            rho = as_state_operator(self.input_state, self.tol)
            out["input_probabilities"] = [float(np.real(np.trace(rho.data @ e)))
                                          for e in cfg.observable.projections()]
            if isinstance(self.input_state, StateVector):
                res = self.result
                out["probabilities"] = list(res.probabilities)
                out["final_state"] = vector_to_json(res.final_state)
                if cfg.pipeline == "rule2":
                    g = self.apparatus
                    out["apparatus"] = {"kind": "gemenge", "provenance": g.provenance.value,
                                        "weights": list(g.weights), "gemenge": g.to_dict()}
                    out["rule2"] = self.rule2.to_dict()
                else:
                    out["apparatus"] = {"kind": "operator", "provenance": None,
                                        "state": matrix_to_json(self.apparatus.data)}
            if cfg.chain_select is not None:
                out["chain"] = self.chain
        if cfg.lattice is not None:
            lat = self.lattice
            x = position_kernel(lat["space"])
            out["lattice"] = {
                "sites": cfg.lattice.n_sites,
                "domains": {n: sorted(d.indices) for n, d in lat["domains"].items()},
                "kernels": [n for n, _ in lat["kernels"]],
                "particles": [{"name": n, "mean_position": float(expectation(x, v).real)}
                              for n, v in lat["particles"]],
            }
        return out


def run_scenario(config: ScenarioConfig) -> dict:
    """Run every declared check once, in declaration order.

    A check passes when its outcome equals its ``expect`` flag, so a scenario
    can assert that something fails (criterion B without Rule 2).
    """
    pipe = Pipeline(config)
    checks = []
    for spec in config.checks:
        check = CHECKS[spec.name]
        tol = spec.tol if spec.tol is not None else (
            getattr(config.tolerances, check.tol_key) if check.tol_key else None)
        try:
            cv = check.run(pipe, tol if tol is not None else 0.0)
        except ScenarioError:
            raise
        except GemengeLabError as exc:
            raise ScenarioError(f"check '{spec.name}': {exc}") from None
        checks.append({
            "name": spec.name,
            "passed": bool(cv.ok) == spec.expect,
            "expect": spec.expect,
            "outcome": bool(cv.ok),
            "value": cv.value,
            "residual": cv.residual,
            "tolerance": tol,
            "detail": cv.detail,
        })
    try:
        results = pipe.results()
    except GemengeLabError as exc:
        raise ScenarioError(str(exc)) from None
    return {
        "scenario": config.name,
        "pipeline": config.pipeline,
        "mode": config.mode.value if config.pipeline == "rule2" else None,
        "seed": config.seed,
        "tolerances": dataclasses.asdict(config.tolerances),
        "checks": checks,
        "results": results,
        "passed": all(c["passed"] for c in checks),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
