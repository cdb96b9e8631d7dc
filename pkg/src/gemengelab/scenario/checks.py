"""Named property checks a scenario can request.

Each check reads what it needs from a ``Pipeline`` (see runner) and returns a
``CheckValue``.  ``requires`` inspects the raw config fields so a scenario
asking for something it does not declare fails at load time, not mid-run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from gemengelab.bcl import check_probability_reproducibility, check_repeatability
from gemengelab.correlations import correlation_report
from gemengelab.errors import GemengeLabError
from gemengelab.hilbert import SchmidtForm, StateVector, operator_norm, orthonormality_residual
from gemengelab.locality import (
    expectation,
    localize,
    pair_expectation,
    pair_state,
    position_kernel,
    separation_residual,
    superselection_check,
)


@dataclass(frozen=True)
class CheckValue:
    ok: bool
    value: object
    residual: float | None
    detail: str = ""


@dataclass(frozen=True)
class Check:
    name: str
    tol_key: str | None
    requires: Callable[[dict], str | None]
    run: Callable


def _measurement(f: dict) -> str | None:
    return None if "observable" in f else "needs a system block"


def _pure(f: dict) -> str | None:
    return _measurement(f) or (None if isinstance(f.get("input_state"), StateVector)
                               else "needs a pure input 'state'")


def _rule2(f: dict) -> str | None:
    return _pure(f) or (None if f.get("pipeline") == "rule2" else "needs 'pipeline rule2'")


def _chain(f: dict) -> str | None:
    return _pure(f) or (None if f.get("chain_select") else "needs a chain block")


def _lattice(f: dict) -> str | None:
    if "lattice" not in f:
        return "needs a lattice block"
    if not f["lattice"].domains:
        return "needs at least one lattice domain"
    return None


def _pair(f: dict) -> str | None:
    msg = _lattice(f)
    if msg:
        return msg
    ps = f["lattice"].particles
    if len(ps) < 2 or not ps[0].inside:
        return "needs two particles, the first declared 'in' a domain"
    return None


def _particles(f: dict) -> str | None:
    return _lattice(f) or (None if f["lattice"].particles else "needs at least one particle")


def _kernels(f: dict) -> str | None:
    msg = _lattice(f)
    if msg:
        return msg
    return None if f["lattice"].kernels else "needs at least one kernel"


def _within(residual: float, tol: float, value=None, detail: str = "") -> CheckValue:
    return CheckValue(bool(residual <= tol), residual if value is None else value, float(residual), detail)


def _probability_reproducibility(p, tol):
    rep = check_probability_reproducibility(p.setup, p.input_state, p.coupling, p.tol)
    return _within(rep.residual, tol, detail=f"pointer probabilities {np.round(rep.pointer_probabilities, 12).tolist()}")


def _criterion_a(p, tol):
    v = p.verdict
    return CheckValue(v.criterion_A, v.criterion_A, v.convex_form_residual,
                      "apparatus state is the convex pointer form" if v.criterion_A
                      else "apparatus state is not the convex pointer form")


def _criterion_b(p, tol):
    v = p.verdict
    kind = type(p.apparatus).__name__
    return CheckValue(v.criterion_B, v.criterion_B, None,
                      f"apparatus described by {kind}"
                      + (f" with provenance {p.apparatus.provenance.value}" if hasattr(p.apparatus, "provenance") else ""))


def _rule2_weights(p, tol):
    g = p.apparatus
    expected = sorted(p.result.probabilities[k] for k in p.result.support())
    got = sorted(g.weights)
    if len(got) != len(expected):
        return CheckValue(False, list(g.weights), None, f"{len(got)} branches for {len(expected)} outcomes")
    res = max(abs(a - b) for a, b in zip(got, expected))
    return _within(res, tol, value=list(g.weights))


def _kraus_completeness(p, tol):
    return _within(p.transformer.completeness_residual(), tol)


def _repeatability(p, tol):
    rep = check_repeatability(p.transformer, states=[p.input_state] + p.random_states(5), seed=p.seed)
    return _within(rep.residual, tol, detail=f"{rep.samples} (T, X, Y) samples")


def _von_neumann(p, tol):
    vn = p.setup.is_von_neumann(p.tol)
    return CheckValue(vn, vn, None, "end states equal the eigenvectors" if vn else "end states differ from eigenvectors")


def _end_state_orthonormality(p, tol):
    return _within(p.setup.end_state_overlap_residual(), tol)


def _repeat_probability(p, tol):
    chain = p.chain
    return _within(abs(chain["repeat_probability"] - 1.0), tol, value=chain["repeat_probability"],
                   detail=f"second stage fires {chain['fired']} outcome(s)")


def _correlation_erasure(p, tol):
    res = p.result
    support = res.support()
    phis = [res.conditional_states[k].data for k in support]
    if orthonormality_residual(np.array(phis)) > p.tol.orth:
        return CheckValue(False, None, None, "conditional system states are not orthonormal")
    form = SchmidtForm.from_families(np.sqrt([res.probabilities[k] for k in support]), phis,
                                     [res.pointer_states[k].data for k in support], p.tol)
    before = correlation_report(form, "Phi", tol=p.tol)
    after = correlation_report(form, "T", tol=p.tol)
    # phase-operator pair names carry three commas, projector pairs one
    phase_after = [abs(v) for n, v in after.pairs if v is not None and n.count(",") > 1]
    worst = max(before.max_residual, after.max_residual)
    return _within(worst, tol, value=max(phase_after, default=0.0),
                   detail="largest phase-operator correlation left after dephasing")


def _trace_preservation(p, tol):
    joint = p.rule2.gemenge.as_operator().data
    res = max(abs(np.trace(joint) - 1.0), operator_norm(joint - p.dephased))
    return _within(res, tol, detail="Rule 2 output versus the dephased coupled state")


def _cluster_separability(p, tol):
    lat = p.lattice
    psi, phi = lat["particles"][0][1], lat["particles"][1][1]
    dom = lat["particle_domains"][0]
    if separation_residual(phi, dom.complement()) > p.tol.eq:
        return CheckValue(False, None, None, "second particle overlaps the first particle's domain")
    worst = 0.0
    for sign in p.statistics:
        pair = pair_state(psi, phi, sign, p.tol)
        for _, a in lat["kernels"]:
            pair_val = pair_expectation(localize(a, dom), pair)
            alone = expectation(a, psi)
            worst = max(worst, abs(pair_val - alone))
    return _within(worst, tol, detail=f"{len(lat['kernels'])} kernel(s), statistics {list(p.statistics)}")


def _position_additivity(p, tol):
    lat = p.lattice
    psi, phi = lat["particles"][0][1], lat["particles"][1][1]
    x = position_kernel(lat["space"])
    worst = 0.0
    for sign in p.statistics:
        pair = pair_state(psi, phi, sign, p.tol)
        worst = max(worst, abs(pair_expectation(x, pair) - expectation(x, psi) - expectation(x, phi)))
    return _within(worst, tol)


def _localization_norm(p, tol):
    worst = 0.0
    for dom in p.lattice["domains"].values():
        for _, a in p.lattice["kernels"]:
            worst = max(worst, operator_norm(localize(a, dom)) - operator_norm(a))
    return CheckValue(bool(worst <= tol), worst, max(worst, 0.0), "max of |Lambda_D(A)| - |A|")


def _localization_idempotence(p, tol):
    worst = 0.0
    for dom in p.lattice["domains"].values():
        for _, a in p.lattice["kernels"]:
            once = localize(a, dom)
            worst = max(worst, operator_norm(localize(once, dom) - once))
    return _within(worst, tol)


def _superselection(p, tol):
    worst, sets = 0.0, 0
    for dom in p.lattice["domains"].values():
        for _, a in p.lattice["kernels"]:
            try:
                rep = superselection_check(localize(a, dom), dom, p.tol)
            except GemengeLabError as exc:
                return CheckValue(False, None, None, str(exc))
            worst, sets = max(worst, rep.max_residual), sets + rep.sets_checked
    return _within(worst, tol, detail=f"{sets} off-domain position sets")


def _separation_status(p, tol):
    worst = 0.0
    for (name, vec), dom in zip(p.lattice["particles"], p.lattice["particle_domains"]):
        worst = max(worst, separation_residual(vec, dom))
    return _within(worst, tol, detail="each particle against its own support domain")


CHECKS: dict[str, Check] = {c.name: c for c in (
    Check("probability-reproducibility", "eq", _measurement, _probability_reproducibility),
    Check("criterion-a", None, _pure, _criterion_a),
    Check("criterion-b", None, _pure, _criterion_b),
    Check("rule2-weights", "eq", _rule2, _rule2_weights),
    Check("kraus-completeness", "eq", _measurement, _kraus_completeness),
    Check("repeatability", "eq", _measurement, _repeatability),
    Check("von-neumann", None, _measurement, _von_neumann),
    Check("end-state-orthonormality", "orth", _measurement, _end_state_orthonormality),
    Check("repeat-probability", "eq", _chain, _repeat_probability),
    Check("correlation-erasure", "eq", _pure, _correlation_erasure),
    Check("trace-preservation", "eq", _rule2, _trace_preservation),
    Check("cluster-separability", "eq", _pair, _cluster_separability),
    Check("position-additivity", "eq", _pair, _position_additivity),
    Check("localization-norm", "eq", _kernels, _localization_norm),
    Check("localization-idempotence", "eq", _kernels, _localization_idempotence),
    Check("superselection", "eq", _kernels, _superselection),
    Check("separation-status", "eq", _particles, _separation_status),
)}
