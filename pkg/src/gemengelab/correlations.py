"""Normalized correlations in bipartite states and their Schmidt-basis calculus.

For ``Phi = sum_k c_k phi_k (x) phi'_k`` the projectors ``P_k``/``P'_k`` on the
Schmidt vectors are perfectly correlated, and the phase operators
``P_{alpha kl} = e^{i alpha}|phi_k><phi_l| + h.c.`` carry the relative phases
of the ``c_k``.  Dephasing ``Phi`` into ``T = sum_k |c_k|^2 P_k (x) P'_k``
keeps the first kind of correlation and removes the second.
Indices are zero-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gemengelab.config import Tolerances, resolve
from gemengelab.errors import DimensionError, InvalidStateError, UndefinedCorrelationError
from gemengelab.hilbert import SchmidtForm, StateOperator, as_array, as_state_operator


def _expect(op: np.ndarray, rho: np.ndarray) -> complex:
    return complex(np.einsum("ij,ji->", rho, op))


def normalized_correlation(o, o_prime, state, tol: Tolerances | None = None) -> float:
    """``(<O O'> - <O><O'>) / (Delta O Delta O')`` in a state on ``H (x) H'``.

    ``o`` acts on the first factor and ``o_prime`` on the second.  Raises
    UndefinedCorrelationError when either spread is at most ``tol.var``.
    """
    tol = resolve(tol)
    rho = as_state_operator(state, tol).data
    a, b = as_array(o), as_array(o_prime)
    da, db = a.shape[0], b.shape[0]
    if da * db != rho.shape[0]:
        raise DimensionError(f"observables of dims {da}, {db} do not fit a state of dim {rho.shape[0]}")
    ia, ib = np.eye(da), np.eye(db)
    oa, ob = np.kron(a, ib), np.kron(ia, b)
    mean_a = _expect(oa, rho).real
    mean_b = _expect(ob, rho).real
    # centred moments avoid the cancellation in <O^2> - <O>^2
    ca = oa - mean_a * np.eye(da * db)
    cb = ob - mean_b * np.eye(da * db)
    var_a = _expect(ca @ ca, rho).real
    var_b = _expect(cb @ cb, rho).real
    sd_a = np.sqrt(max(var_a, 0.0))
    sd_b = np.sqrt(max(var_b, 0.0))
    if sd_a <= tol.var or sd_b <= tol.var:
        raise UndefinedCorrelationError(
            f"observable spread vanishes (Delta O = {sd_a:.3e}, Delta O' = {sd_b:.3e})")
    cov = _expect(ca @ cb, rho).real
    return float(cov / (sd_a * sd_b))


def schmidt_projectors(form: SchmidtForm, k: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 <= k < form.size:
        raise IndexError(f"Schmidt index {k} out of range")
    u, v = form.left[k], form.right[k]
    return np.outer(u, u.conj()), np.outer(v, v.conj())


def phase_operators(form: SchmidtForm, k: int, l: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """``(P_{alpha kl}, P'_{beta kl})``, both self-adjoint; needs ``k != l``."""
    if k == l:
        raise ValueError("phase operators need two distinct Schmidt indices")
    for i in (k, l):
        if not 0 <= i < form.size:
            raise IndexError(f"Schmidt index {i} out of range")

    def build(vecs, angle):
        kl = np.outer(vecs[k], vecs[l].conj())
        return np.exp(1j * angle) * kl + np.exp(-1j * angle) * kl.conj().T

    return build(form.left, alpha), build(form.right, beta)


def projector_moments(c, k: int) -> tuple[float, float]:
    """Closed forms ``<P_k> = |c_k|^2`` and ``Delta P_k = |c_k| sqrt(1 - |c_k|^2)``."""
    a = abs(complex(c[k]))
    return a**2, a * np.sqrt(max(1.0 - a**2, 0.0))


def phase_correlation_closed_form(c, k: int, l: int, alpha: float, beta: float) -> float:
    """``(e^{i(a+b)} c_k* c_l + e^{-i(a+b)} c_l* c_k) / (|c_k|^2 + |c_l|^2)``."""
    ck, cl = complex(c[k]), complex(c[l])
    s = alpha + beta
    num = np.exp(1j * s) * ck.conjugate() * cl + np.exp(-1j * s) * cl.conjugate() * ck
    return float(num.real / (abs(ck) ** 2 + abs(cl) ** 2))


def dephased_state(form: SchmidtForm) -> StateOperator:
    """``T = sum_k |c_k|^2 P_k (x) P'_k``."""
    d = form.left.shape[1] * form.right.shape[1]
    t = np.zeros((d, d), dtype=complex)
    for k in range(form.size):
        p, pp = schmidt_projectors(form, k)
        t += abs(form.coefficients[k]) ** 2 * np.kron(p, pp)
    return StateOperator(t, form.left_dims + form.right_dims, check=False)


@dataclass(frozen=True)
class CorrelationReport:
    """Correlations of one state; ``residuals`` compare against the closed forms."""

    state_tag: str
    pairs: tuple[tuple[str, float | None], ...]
    residuals: tuple[tuple[str, float], ...] = field(default=())

    def value(self, name: str) -> float | None:
        return dict(self.pairs)[name]

    @property
    def max_residual(self) -> float:
        return max((r for _, r in self.residuals), default=0.0)

    def to_dict(self) -> dict:
        return {"state": self.state_tag,
                "pairs": [{"observables": n, "rho": v} for n, v in self.pairs],
                "residuals": [{"observables": n, "residual": r} for n, r in self.residuals]}


def correlation_report(form: SchmidtForm, which: str = "Phi", angles=((0.0, 0.0), (np.pi / 4, np.pi / 4)),
                       tol: Tolerances | None = None) -> CorrelationReport:
    """Projector and phase-operator correlations in ``Phi`` or in its dephased ``T``.

    Undefined correlations (vanishing spread) are reported as None.
    """
    tol = resolve(tol)
    if which == "Phi":
        state = form.to_vector().projector()
    elif which == "T":
        state = dephased_state(form)
    else:
        raise ValueError("which must be 'Phi' or 'T'")
    c = form.coefficients
    pairs, residuals = [], []
    for k in range(form.size):
        name = f"P_{k},P'_{k}"
        try:
            rho = normalized_correlation(*schmidt_projectors(form, k), state, tol)
        except UndefinedCorrelationError:
            pairs.append((name, None))
            continue
        pairs.append((name, rho))
        residuals.append((name, abs(rho - 1.0)))
    for k in range(form.size):
        for l in range(k + 1, form.size):
            for alpha, beta in angles:
                name = f"P_{alpha:.6g},{k}{l},P'_{beta:.6g},{k}{l}"
                try:
                    rho = normalized_correlation(*phase_operators(form, k, l, alpha, beta), state, tol)
                except UndefinedCorrelationError:
                    pairs.append((name, None))
                    continue
                pairs.append((name, rho))
                expected = phase_correlation_closed_form(c, k, l, alpha, beta) if which == "Phi" else 0.0
                residuals.append((name, abs(rho - expected)))
    return CorrelationReport(which, tuple(pairs), tuple(residuals))


@dataclass(frozen=True)
class CorrelationSamples:
    """Populations ``<P_k>`` and, per pair ``k < l``, the correlations at
    ``alpha + beta = 0`` and ``alpha + beta = pi/2``."""

    populations: tuple[float, ...]
    phase_samples: dict


def sample_correlations(form: SchmidtForm, tol: Tolerances | None = None) -> CorrelationSamples:
    """Evaluate the correlations needed by ``reconstruct_state`` directly in ``Phi``."""
    tol = resolve(tol)
    phi = form.to_vector().projector()
    pops = []
    for k in range(form.size):
        p, _ = schmidt_projectors(form, k)
        pops.append(float(np.real(np.trace(phi.data @ np.kron(p, np.eye(form.right.shape[1]))))))
    samples = {}
    for k in range(form.size):
        for l in range(k + 1, form.size):
            vals = []
            for s in (0.0, np.pi / 2):
                try:
                    vals.append(normalized_correlation(*phase_operators(form, k, l, s, 0.0), phi, tol))
                except UndefinedCorrelationError:
                    vals.append(None)
            samples[(k, l)] = tuple(vals)
    return CorrelationSamples(tuple(pops), samples)


@dataclass(frozen=True)
class Reconstruction:
    coefficients: np.ndarray
    flagged: tuple[int, ...]


def reconstruct_state(samples: CorrelationSamples, tol: Tolerances | None = None) -> Reconstruction:
    """Recover ``c_k`` up to a global phase from populations and phase correlations.

    With ``z = c_k* c_l`` and ``n = |c_k|^2 + |c_l|^2`` the two samples give
    ``2 Re z / n`` and ``-2 Im z / n``.  Pairs are chained from the first
    index with nonvanishing coefficient, whose ``c`` is fixed real positive.
    Indices with ``|c_k| <= tol.var`` are flagged; only their modulus is returned.
    """
    tol = resolve(tol)
    pops = np.clip(np.array(samples.populations, dtype=float), 0.0, None)
    mags = np.sqrt(pops)
    if abs(pops.sum() - 1.0) > tol.rec:
        raise InvalidStateError(f"populations sum to {pops.sum():.12g}")
    flagged = tuple(int(i) for i in np.flatnonzero(mags <= tol.var))
    good = [i for i in range(mags.size) if i not in flagged]
    c = mags.astype(complex)
    if not good:
        return Reconstruction(c, flagged)
    anchor = good[0]
    for l in good[1:]:
        key, conj = ((anchor, l), False) if anchor < l else ((l, anchor), True)
        r0, r90 = samples.phase_samples[key]
        n = pops[anchor] + pops[l]
        z = n / 2 * (r0 - 1j * r90)  # c_k* c_l for the stored (k, l) order
        if conj:
            z = z.conjugate()
        c[l] = z / mags[anchor]
        c[l] *= mags[l] / abs(c[l]) if abs(c[l]) > 0 else 1.0
    return Reconstruction(c, flagged)
