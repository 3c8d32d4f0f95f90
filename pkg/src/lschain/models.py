"""Gapped chain models and dense assembly of the full Hamiltonian."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateGroundStateError, DimensionCapError, PreconditionError
from .numio import decode_matrix, encode_matrix
from .operators import (
    IntervalSupport,
    LocalOperator,
    act_left,
    kronecker_sum,
    vacuum_vector,
    weighted_norm_matrix,
)

DEFAULT_DIM_CAP = 4096
SEED_NORM = 0.5


@dataclass(frozen=True)
class ChainSpec:
    """Everything the engine needs to know about a chain.

    ``seed_potentials`` holds one template per interval length when the chain
    is translation invariant (templates anchored at site 1); otherwise it lists
    every potential with its actual support.
    """

    n_sites: int
    local_dim: int
    h_local: np.ndarray
    omega: np.ndarray
    seed_potentials: tuple
    kbar: int = 1
    translation_invariant: bool = True
    model: str = "custom"
    rng_seed: Optional[int] = None
    d_trunc: Optional[int] = None
    notes: dict = field(default_factory=dict, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        h = np.array(self.h_local, dtype=complex)
        omega = np.array(self.omega, dtype=complex)
        h.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "h_local", h)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "seed_potentials", tuple(self.seed_potentials))
        self._validate()

    def _validate(self):
        d = self.local_dim
        if self.n_sites < 2:
            raise PreconditionError("a chain needs at least two sites")
        if self.h_local.shape != (d, d) or self.omega.shape != (d,):
            raise PreconditionError("h_local / omega shapes do not match local_dim")
        if not np.allclose(self.h_local, self.h_local.conj().T, atol=1e-12, rtol=0):
            raise PreconditionError("h_local is not Hermitian")
        if abs(np.linalg.norm(self.omega) - 1) > 1e-12:
            raise PreconditionError("omega must be a unit vector")
        if np.max(np.abs(self.h_local @ self.omega), initial=0.0) > 1e-12:
            raise PreconditionError("h_local does not annihilate omega")
        perp = np.eye(d) - np.outer(self.omega, self.omega.conj())
        q = np.linalg.eigh(perp)[1][:, 1:]
        if d > 1 and np.linalg.eigvalsh(q.conj().T @ self.h_local @ q).min() < 1 - 1e-12:
            raise PreconditionError("h_local has spectrum below 1 off the vacuum")
        for op in self.seed_potentials:
            if op.support.edges < 1 or op.support.edges > self.kbar:
                raise PreconditionError(f"seed potential range {op.support.edges} outside 1..{self.kbar}")
            if op.dim != op.support.dim(d):
                raise PreconditionError("seed potential has the wrong dimension")
            if not np.allclose(op.matrix, op.matrix.conj().T, atol=1e-12, rtol=0):
                raise PreconditionError("seed potentials must be Hermitian")
            if weighted_norm_matrix(op.matrix, op.support.edges, self) > SEED_NORM + 1e-12:
                raise PreconditionError("seed potential weighted norm exceeds 1/2")

    # -- cached per-length objects -------------------------------------------------

    def _cached(self, key, builder):
        if key not in self._cache:
            value = builder()
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            self._cache[key] = value
        return self._cache[key]

    def vacuum(self, edges: int) -> np.ndarray:
        return self._cached(("vac", edges), lambda: vacuum_vector(self.omega, edges + 1))

    def h0(self, edges: int) -> np.ndarray:
        return self._cached(("h0", edges), lambda: kronecker_sum(self.h_local, edges + 1))

    def h0_inv_sqrt(self, edges: int) -> np.ndarray:
        def build():
            lam, vecs = np.linalg.eigh(self.h0(edges))
            return (vecs / np.sqrt(lam + 1.0)) @ vecs.conj().T
        return self._cached(("h0is", edges), build)

    # -- potentials ----------------------------------------------------------------

    def potential(self, support: IntervalSupport) -> Optional[np.ndarray]:
        """Seed potential on ``support`` or ``None`` if there is none."""
        for op in self.seed_potentials:
            if self.translation_invariant:
                if op.support.edges == support.edges:
                    return op.matrix
            elif op.support == support:
                return op.matrix
        return None

    def seed_supports(self) -> list[IntervalSupport]:
        out = []
        for k in range(1, self.kbar + 1):
            for i in range(1, self.n_sites - k + 1):
                s = IntervalSupport(i, k)
                if self.potential(s) is not None:
                    out.append(s)
        return out

    def with_sites(self, n: int) -> "ChainSpec":
        """Same local data on a chain of ``n`` sites (translation-invariant specs only)."""
        if not self.translation_invariant:
            raise PreconditionError("only translation-invariant chains can be resized")
        return ChainSpec(n, self.local_dim, self.h_local, self.omega, self.seed_potentials,
                         kbar=self.kbar, translation_invariant=True, model=self.model,
                         rng_seed=self.rng_seed, d_trunc=self.d_trunc, notes=dict(self.notes))


# ------------------------------------------------------------------------------
# builders


def normalize_onsite(h_raw: np.ndarray):
    """Shift and rescale ``h_raw`` so its ground energy is 0 and its gap is 1.

    Returns ``(h, omega)`` in the basis of ``h_raw``.
    """
    h_raw = np.asarray(h_raw, dtype=complex)
    if not np.allclose(h_raw, h_raw.conj().T, atol=1e-12, rtol=0):
        raise PreconditionError("h_raw must be Hermitian")
    lam, vecs = np.linalg.eigh(h_raw)
    gap = lam[1] - lam[0]
    if gap < 1e-10:
        raise DegenerateGroundStateError(f"ground-state gap {gap:.3e} too small")
    omega = vecs[:, 0]
    phase = omega[np.argmax(np.abs(omega))]
    omega = omega * (abs(phase) / phase)
    h = (h_raw - lam[0] * np.eye(len(lam))) / gap
    perp = np.eye(len(lam)) - np.outer(omega, omega.conj())
    h = perp @ h @ perp
    h = 0.5 * (h + h.conj().T)
    return h, omega


def _rescale(m: np.ndarray, edges: int, spec_like) -> np.ndarray:
    wn = weighted_norm_matrix(m, edges, spec_like)
    if wn == 0:
        raise PreconditionError("cannot normalize a vanishing potential")
    return m * (SEED_NORM / wn)


class _LocalFrame:
    """Minimal stand-in exposing ``h0_inv_sqrt`` before a ChainSpec exists."""

    def __init__(self, h):
        self.h = h

    def h0_inv_sqrt(self, edges):
        lam, vecs = np.linalg.eigh(kronecker_sum(self.h, edges + 1))
        return (vecs / np.sqrt(lam + 1.0)) @ vecs.conj().T


def _random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


def build_spin_model(d: int, n: int, rng_seed: int = 0, kbar: int = 1,
                     potential: Optional[np.ndarray] = None) -> ChainSpec:
    """Gapped spin chain with ``h = diag(0, 1, ..., 1)`` and a random Hermitian coupling.

    ``potential`` overrides the random nearest-neighbour term; it is still
    rescaled to weighted norm 1/2.
    """
    if d < 2:
        raise PreconditionError("local dimension must be at least 2")
    h = np.diag([0.0] + [1.0] * (d - 1)).astype(complex)
    omega = np.zeros(d, dtype=complex)
    omega[0] = 1.0
    frame = _LocalFrame(h)
    rng = np.random.default_rng(rng_seed)
    seeds = []
    for k in range(1, kbar + 1):
        if k == 1 and potential is not None:
            v = np.asarray(potential, dtype=complex)
        else:
            v = _random_hermitian(rng, d ** (k + 1))
        seeds.append(LocalOperator(IntervalSupport(1, k), _rescale(v, k, frame)))
    return ChainSpec(n, d, h, omega, seeds, kbar=kbar, translation_invariant=True,
                     model="spin", rng_seed=rng_seed)


def ladder_operators(dim: int):
    """Truncated harmonic-oscillator ``(x, p)`` with ``x = (a + a†)/√2``."""
    a = np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)
    x = (a + a.conj().T) / np.sqrt(2)
    p = 1j * (a.conj().T - a) / np.sqrt(2)
    return x, p


def anharmonic_onsite(d_trunc: int) -> np.ndarray:
    x, p = ladder_operators(d_trunc)
    x2 = x @ x
    return p @ p + x2 + x2 @ x2


def build_anharmonic_model(d_trunc: int, n: int, kbar: int = 1) -> ChainSpec:
    """Truncated φ⁴ crystal: ``p² + x² + x⁴`` on site, ``x ⊗ x`` between neighbours.

    The local basis is rotated to the eigenbasis of the on-site Hamiltonian so
    that the vacuum is the first basis vector.
    """
    if d_trunc < 3:
        raise PreconditionError("d_trunc must be at least 3")
    if kbar != 1:
        raise PreconditionError("the anharmonic crystal only has nearest-neighbour coupling")
    x, _ = ladder_operators(d_trunc)
    h_raw = anharmonic_onsite(d_trunc)
    lam, vecs = np.linalg.eigh(h_raw)
    if lam[1] - lam[0] < 1e-10:
        raise DegenerateGroundStateError("anharmonic ground state is degenerate")
    h = np.diag((lam - lam[0]) / (lam[1] - lam[0])).astype(complex)
    h[0, 0] = 0.0
    omega = np.zeros(d_trunc, dtype=complex)
    omega[0] = 1.0
    x_eig = vecs.conj().T @ x @ vecs
    w = np.kron(x_eig, x_eig)
    w = 0.5 * (w + w.conj().T)
    w = _rescale(w, 1, _LocalFrame(h))

    xb, _ = ladder_operators(d_trunc + 4)
    exact_x4 = np.linalg.matrix_power(xb, 4)[:d_trunc, :d_trunc]
    notes = {
        "x4_truncation_discrepancy": float(np.linalg.norm(exact_x4 - np.linalg.matrix_power(x, 4))),
        "h_raw_min_eig": float(lam[0]),
        "onsite_gap_raw": float(lam[1] - lam[0]),
    }
    return ChainSpec(n, d_trunc, h, omega, [LocalOperator(IntervalSupport(1, 1), w)], kbar=1,
                     translation_invariant=True, model="anharmonic", d_trunc=d_trunc, notes=notes)


def build_model(model: str, n_sites: int, local_dim: int = 2, rng_seed: int = 0,
                d_trunc: int = 4, kbar: int = 1) -> ChainSpec:
    if model == "spin":
        return build_spin_model(local_dim, n_sites, rng_seed=rng_seed, kbar=kbar)
    if model == "anharmonic":
        return build_anharmonic_model(d_trunc, n_sites, kbar=kbar)
    raise PreconditionError(f"unknown model {model!r}")


# ------------------------------------------------------------------------------
# full Hamiltonian


@dataclass(frozen=True)
class FullHamiltonian:
    matrix: np.ndarray
    tau: complex


def _check_cap(spec: ChainSpec, cap: int):
    dim = spec.local_dim**spec.n_sites
    if dim > cap:
        raise DimensionCapError(f"chain dimension {dim} exceeds cap {cap}")
    return dim


def assemble_full_hamiltonian(spec: ChainSpec, tau: complex, cap: int = DEFAULT_DIM_CAP) -> FullHamiltonian:
    """Dense ``Σ H_i + τ Σ V_I`` on the whole chain."""
    _check_cap(spec, cap)
    whole = IntervalSupport(1, spec.n_sites - 1)
    m = spec.h0(whole.edges).copy()
    for s in spec.seed_supports():
        m += tau * embed_on_chain(spec.potential(s), s, spec)
    return FullHamiltonian(m, complex(tau))


def embed_on_chain(m: np.ndarray, support: IntervalSupport, spec: ChainSpec) -> np.ndarray:
    d = spec.local_dim
    dim = d**spec.n_sites
    return act_left(m, support.left - 1, support.n_sites, np.eye(dim, dtype=complex),
                    spec.n_sites, d)


def shift_permutation(n_sites: int, d: int, shift: int = 1) -> np.ndarray:
    """Permutation matrix sending site ``i`` to site ``i + shift`` (cyclically)."""
    dim = d**n_sites
    idx = np.arange(dim).reshape((d,) * n_sites)
    moved = np.moveaxis(idx, list(range(n_sites)), [(i + shift) % n_sites for i in range(n_sites)])
    perm = np.zeros((dim, dim))
    perm[np.arange(dim), moved.reshape(-1)] = 1.0
    return perm


# ------------------------------------------------------------------------------
# serialization


def spec_to_dict(spec: ChainSpec) -> dict:
    return {
        "n_sites": spec.n_sites,
        "local_dim": spec.local_dim,
        "model": spec.model,
        "rng_seed": spec.rng_seed,
        "d_trunc": spec.d_trunc,
        "kbar": spec.kbar,
        "translation_invariant": spec.translation_invariant,
        "h_local": encode_matrix(spec.h_local),
        "omega": encode_matrix(spec.omega),
        "seed_potentials": [
            {"left": op.support.left, "edges": op.support.edges, "matrix": encode_matrix(op.matrix)}
            for op in spec.seed_potentials
        ],
        "notes": spec.notes,
    }


def spec_from_dict(data: dict) -> ChainSpec:
    seeds = [LocalOperator(IntervalSupport(p["left"], p["edges"]), decode_matrix(p["matrix"]))
             for p in data["seed_potentials"]]
    return ChainSpec(
        data["n_sites"], data["local_dim"], decode_matrix(data["h_local"]),
        decode_matrix(data["omega"]), seeds, kbar=data["kbar"],
        translation_invariant=data["translation_invariant"], model=data["model"],
        rng_seed=data.get("rng_seed"), d_trunc=data.get("d_trunc"), notes=data.get("notes", {}),
    )


def save_spec(spec: ChainSpec, path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=1))


def load_spec(path) -> ChainSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))
