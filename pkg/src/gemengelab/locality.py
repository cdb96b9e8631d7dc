"""Lattice position space, D-local operators and identical-particle constructions.

Position space is a 1-D lattice; kernels ``a(x_i; x_j)`` are ``N x N``
matrices in the site basis.  The test-function form of D-locality becomes a
support condition: every row and column indexed by a site outside ``D``
vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from gemengelab.config import Tolerances, resolve
from gemengelab.errors import DimensionError, NotLocalError, OrthonormalityError, ZeroProjectionError
from gemengelab.hilbert import (
    HilbertSpace,
    Operator,
    StateVector,
    as_array,
    as_state_operator,
    operator_norm,
    symmetric_projection,
    tensor,
    _parse_statistics,
)


@dataclass(frozen=True, eq=False)
class LatticeSpace:
    sites: np.ndarray

    def __post_init__(self):
        x = np.array(self.sites, dtype=float).reshape(-1)
        if x.size < 1:
            raise DimensionError("a lattice needs at least one site")
        if np.any(np.diff(x) <= 0):
            raise ValueError("lattice sites must be strictly increasing")
        x.flags.writeable = False
        object.__setattr__(self, "sites", x)

    @classmethod
    def uniform(cls, n: int, spacing: float = 1.0, origin: float = 0.0) -> "LatticeSpace":
        return cls(origin + spacing * np.arange(n))

    @property
    def n(self) -> int:
        return self.sites.size

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace(self.n, "lattice")

    def domain(self, indices: Iterable[int]) -> "Domain":
        return Domain(self, frozenset(int(i) for i in indices))

    def interval(self, lo: float, hi: float) -> "Domain":
        """Sites with ``lo <= x < hi``."""
        return self.domain(np.flatnonzero((self.sites >= lo) & (self.sites < hi)))


@dataclass(frozen=True, eq=False)
class Domain:
    lattice: LatticeSpace
    indices: frozenset

    def __post_init__(self):
        idx = frozenset(int(i) for i in self.indices)
        if any(i < 0 or i >= self.lattice.n for i in idx):
            raise DimensionError("domain index outside the lattice")
        object.__setattr__(self, "indices", idx)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.lattice.n, dtype=bool)
        m[sorted(self.indices)] = True
        return m

    def complement(self) -> "Domain":
        return Domain(self.lattice, frozenset(range(self.lattice.n)) - self.indices)


def _mask(domain, n: int | None = None) -> np.ndarray:
    if isinstance(domain, Domain):
        return domain.mask()
    m = np.zeros(n, dtype=bool)
    m[sorted(int(i) for i in domain)] = True
    return m


def projection_pd(space, domain) -> np.ndarray:
    """Diagonal 0/1 projection onto states supported in ``domain``."""
    n = space.n if isinstance(space, LatticeSpace) else int(space)
    return np.diag(_mask(domain, n).astype(complex))


def localize(a, domain) -> np.ndarray:
    """``P_D a P_D``."""
    a = as_array(a)
    m = _mask(domain, a.shape[0])
    out = np.zeros_like(a)
    out[np.ix_(m, m)] = a[np.ix_(m, m)]
    return out


def locality_residual(a, domain) -> float:
    """Largest kernel entry in a row or column outside ``domain``."""
    a = as_array(a)
    off = ~_mask(domain, a.shape[0])
    if not off.any():
        return 0.0
    return float(max(np.abs(a[off, :]).max(), np.abs(a[:, off]).max()))


def is_d_local(a, domain, tol: Tolerances | None = None) -> bool:
    return locality_residual(a, domain) <= resolve(tol).eq


def position_kernel(lattice: LatticeSpace) -> np.ndarray:
    return np.diag(lattice.sites.astype(complex))


def shift_kernel(lattice: LatticeSpace, step: int = 1) -> np.ndarray:
    """Hermitian hopping kernel ``|i+step><i| + h.c.`` (open boundaries)."""
    n = lattice.n
    s = np.zeros((n, n), dtype=complex)
    for i in range(n - step):
        s[i + step, i] = 1.0
    return s + s.conj().T


def gaussian_packet(lattice: LatticeSpace, center: float, width: float, momentum: float = 0.0,
                    domain=None) -> StateVector:
    """Normalized Gaussian amplitudes, optionally truncated to ``domain``."""
    x = lattice.sites
    amps = np.exp(-((x - center) ** 2) / (4 * width**2) + 1j * momentum * x)
    if domain is not None:
        amps = amps * _mask(domain, lattice.n)
    return StateVector.normalized(amps)


def gaussian_packet_kernel(lattice: LatticeSpace, center: float, width: float) -> np.ndarray:
    """Projector onto a Gaussian packet."""
    return gaussian_packet(lattice, center, width).projector().data


def hopping_evolution(lattice: LatticeSpace, time: float, hopping: float = 1.0) -> np.ndarray:
    """``exp(-i t H)`` for the nearest-neighbour hopping Hamiltonian."""
    h = -hopping * shift_kernel(lattice)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * time * w)) @ v.conj().T


def pair_state(psi: StateVector, phi: StateVector, statistics=1, tol: Tolerances | None = None) -> StateVector:
    """``(psi (x) phi +- phi (x) psi) / sqrt(2)`` for orthogonal one-particle states."""
    tol = resolve(tol)
    sign = _parse_statistics(statistics)
    if psi.dim != phi.dim:
        raise DimensionError("both particles must share one lattice")
    overlap = abs(psi.inner(phi))
    if overlap > tol.orth:
        raise OrthonormalityError(f"pair_state needs orthogonal inputs, overlap is {overlap:.3e}")
    a = np.kron(psi.data, phi.data)
    b = np.kron(phi.data, psi.data)
    return StateVector((a + sign * b) / np.sqrt(2), (psi.dim, psi.dim), check=False)


def pair_observable(a) -> Operator:
    """``a (x) 1 + 1 (x) a``: a one-particle kernel made measurable on the pair."""
    a = as_array(a)
    eye = np.eye(a.shape[0])
    return Operator(np.kron(a, eye) + np.kron(eye, a), (a.shape[0], a.shape[0]))


def pair_expectation(a, pair: StateVector) -> complex:
    """``<Psi| a (x) 1 + 1 (x) a |Psi>`` without forming the ``N^2 x N^2`` operator."""
    a = as_array(a)
    n = a.shape[0]
    if pair.dims != (n, n):
        raise DimensionError(f"pair state dims {pair.dims} do not match a kernel on {n} sites")
    m = pair.data.reshape(n, n)
    return complex(np.vdot(m, a @ m + m @ a.T))


def expectation(op, state) -> complex:
    s = as_array(state)
    o = as_array(op)
    if s.ndim == 1:
        return complex(np.vdot(s, o @ s))
    return complex(np.trace(s @ o))


def separation_residual(state, domain) -> float:
    t = as_state_operator(state).data
    return operator_norm(localize(t, domain) - t)


def separation_status(state, domain, tol: Tolerances | None = None) -> bool:
    """True iff ``P_D T P_D = T``, i.e. ``D`` is a separation status of the state.

    For such T, ``tr[T E]`` only sees the D-block of any effect E, so every
    D-local registration is undisturbed by what lies outside D.
    """
    return separation_residual(state, domain) <= resolve(tol).eq


@dataclass(frozen=True, eq=False)
class StatusChange:
    before: StateVector
    after: StateVector
    overlap: float

    def to_dict(self) -> dict:
        from gemengelab.serialize import vector_to_json

        return {"before": vector_to_json(self.before), "after": vector_to_json(self.after),
                "overlap": self.overlap}


def status_change(psi: StateVector, others: StateVector, statistics=1, tol: Tolerances | None = None) -> StatusChange:
    """Product ``psi (x) Psi'`` versus its full (anti)symmetrization.

    ``others`` is the n-particle state of the surrounding identical systems,
    with dims ``(N,) * n`` and already of the given symmetry.  ``overlap`` is
    ``|<before|after>|``; values below 1 witness that the map from the first
    form to the second is not unitary on the product.
    """
    tol = resolve(tol)
    sign = _parse_statistics(statistics)
    n_sites = psi.dim
    if len(others.dims) == 1 and others.dim == n_sites:
        odims = (n_sites,)
    else:
        odims = others.dims
    if any(d != n_sites for d in odims):
        raise DimensionError("all particles must live on one lattice")
    others = StateVector(others.data, odims, check=False)
    sym_res = np.linalg.norm(symmetric_projection(others, sign) - others.data)
    if sym_res > tol.eq:
        raise ValueError(f"surrounding state is not {'symmetric' if sign > 0 else 'antisymmetric'} "
                         f"(residual {sym_res:.3e})")
    before = tensor(psi, others)
    proj = symmetric_projection(before, sign)
    nrm = np.linalg.norm(proj)
    if nrm <= tol.norm:
        raise ZeroProjectionError("full (anti)symmetrization vanishes")
    after = StateVector(proj / nrm, before.dims, check=False)
    return StatusChange(before, after, float(abs(before.inner(after))))


@dataclass(frozen=True)
class SuperselectionReport:
    max_residual: float
    sets_checked: int

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual, "sets_checked": self.sets_checked}


def superselection_check(a, domain, tol: Tolerances | None = None) -> SuperselectionReport:
    """``|[A, E^Q(X)]|`` for X = each single site off D and X = all of them."""
    tol = resolve(tol)
    a = as_array(a)
    if not is_d_local(a, domain, tol):
        raise NotLocalError(f"operator is not D-local (residual {locality_residual(a, domain):.3e})")
    n = a.shape[0]
    off = np.flatnonzero(~_mask(domain, n))
    sets = [[i] for i in off] + ([list(off)] if off.size > 1 else [])
    worst = 0.0
    for x in sets:
        e = projection_pd(n, x)
        worst = max(worst, operator_norm(a @ e - e @ a))
    return SuperselectionReport(worst, len(sets))


def localize_povm(effects: Sequence, domain) -> list[np.ndarray]:
    """D-localization of every effect of a POV measure."""
    return [localize(e, domain) for e in effects]
