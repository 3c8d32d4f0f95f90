"""Sequential Lie-Schwinger block-diagonalization over nested intervals of a chain.

Every interval ``I_{k,q}`` is processed once, in the order
``(1,1), (1,2), ..., (1,N-1), (2,1), ..., (N-1,1)``. At each step the local
Hamiltonian ``G`` (on-site terms plus the already block-diagonal shorter
potentials inside the interval) is perturbed by the potential on the
interval itself. A generator ``S`` that is off-diagonal with respect to the
interval vacuum projector is built order by order in ``τ`` and every other
potential affected by the conjugation ``e^S (·) e^{-S}`` is updated.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from types import MappingProxyType
from typing import Iterator, Mapping, Optional

import numpy as np

from .errors import (
    DimensionCapError,
    NonConvergenceError,
    OutOfDiskError,
    PreconditionError,
)
from .majorant import bj_tail, delta_of_tau, tau_domain_estimate
from .models import ChainSpec
from .numio import decode_complex, decode_matrix, encode_complex, encode_matrix
from .operators import (
    RCOND_THRESHOLD,
    IntervalSupport,
    LocalOperator,
    ReducedResolvent,
    VacuumProjectors,
    act_left,
    act_right,
    embed_matrix,
    matrix_exponential,
    neumann_reduced_resolvent,
    operator_norm,
    vacuum_projectors,
    weighted_norm_matrix,
)

U_DIM_CAP = 4096


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True, order=True)
class StepIndex:
    """Step ``(k, q)``: the interval with ``k`` edges starting at site ``q``."""

    k: int
    q: int

    @property
    def support(self) -> IntervalSupport:
        return IntervalSupport(self.q, self.k)

    def predecessor(self, n_sites: int) -> "StepIndex":
        if self.k == 1 and self.q == 1:
            return StepIndex(0, n_sites)
        if self.q == 1:
            return StepIndex(self.k - 1, n_sites - self.k + 1)
        return StepIndex(self.k, self.q - 1)

    def __str__(self):
        return f"({self.k},{self.q})"


INITIAL_STEP = StepIndex(0, 0)


def step_sequence(n: int) -> list[StepIndex]:
    if n < 2:
        raise PreconditionError("need at least two sites")
    return [StepIndex(k, q) for k in range(1, n) for q in range(1, n - k + 1)]


def vacuum_expectation(m: np.ndarray, vac: np.ndarray) -> complex:
    return complex(vac.conj() @ m @ vac)


def blockdiag_residual(m: np.ndarray, vac: np.ndarray) -> float:
    """Norm of the vacuum/excited off-diagonal blocks of ``m``."""
    c = vac.conj() @ m @ vac
    col = m @ vac - c * vac
    row = vac.conj() @ m - c * vac.conj()
    return float(max(np.linalg.norm(col), np.linalg.norm(row)))


@dataclass(frozen=True)
class PotentialTable:
    """Effective potentials on every interval of length ≥ 1 after ``step``."""

    entries: Mapping[IntervalSupport, LocalOperator]
    vacuum_expectations: Mapping[IntervalSupport, complex]
    step: StepIndex
    tau: complex

    def __post_init__(self):
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))
        object.__setattr__(self, "vacuum_expectations", MappingProxyType(dict(self.vacuum_expectations)))

    def matrix(self, support: IntervalSupport) -> np.ndarray:
        return self.entries[support].matrix

    def updated(self, changes: dict, step: StepIndex, spec: ChainSpec) -> "PotentialTable":
        entries = dict(self.entries)
        expect = dict(self.vacuum_expectations)
        for sup, m in changes.items():
            op = LocalOperator(sup, m)
            entries[sup] = op
            expect[sup] = vacuum_expectation(op.matrix, spec.vacuum(sup.edges))
        return PotentialTable(entries, expect, step, self.tau)

    def energy(self) -> complex:
        """``τ Σ ⟨V⟩`` over all entries, summed in a fixed order."""
        return self.tau * complex(math.fsum(self.vacuum_expectations[s].real for s in sorted(self.entries))
                                  + 1j * math.fsum(self.vacuum_expectations[s].imag for s in sorted(self.entries)))


def initial_table(spec: ChainSpec, tau: complex) -> PotentialTable:
    d = spec.local_dim
    entries = {}
    expect = {}
    for l in range(1, spec.n_sites):
        for i in range(1, spec.n_sites - l + 1):
            sup = IntervalSupport(i, l)
            m = spec.potential(sup)
            if m is None:
                m = np.zeros((sup.dim(d), sup.dim(d)), dtype=complex)
            entries[sup] = LocalOperator(sup, m)
            expect[sup] = vacuum_expectation(entries[sup].matrix, spec.vacuum(l))
    return PotentialTable(entries, expect, INITIAL_STEP, complex(tau))


@dataclass
class SeriesDiagnostics:
    step: str = ""
    j_used: int = 0
    tail_estimate: float = 0.0
    s_norm: float = 0.0
    v_weighted_norm: float = 0.0
    v_diag_weighted_norm: float = 0.0
    delta: float = 0.5
    certified: bool = True
    rcond: float = 1.0
    snorm_violations: int = 0
    interval_gap: float = math.nan
    ad_terms_max: int = 0
    neumann_deviation: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EngineConfig:
    tau: complex = 0.0
    j_max: int = 40
    tail_tol: float = 1e-14
    residual_tol: float = 1e-10
    track_u: bool = False
    neumann_check: bool = False
    a_root: Optional[float] = None
    ad_max_terms: int = 60
    u_cap: int = U_DIM_CAP
    rcond_threshold: float = RCOND_THRESHOLD

    def __post_init__(self):
        object.__setattr__(self, "tau", complex(self.tau))
        if self.j_max < 1:
            raise PreconditionError("j_max must be at least 1")
        if not (self.tail_tol > 0 and self.residual_tol > 0):
            raise PreconditionError("tolerances must be positive")

    def majorant_a(self) -> float:
        return self.a_root if self.a_root is not None else _default_estimate().a_root


@lru_cache(maxsize=1)
def _default_estimate():
    return tau_domain_estimate()


# ---------------------------------------------------------------------------
# G and E


def build_g(table: PotentialTable, step: StepIndex, spec: ChainSpec,
            residual_tol: float = 1e-10) -> tuple[LocalOperator, complex]:
    """Local Hamiltonian of the step interval and its vacuum eigenvalue."""
    interval = step.support
    d = spec.local_dim
    g = np.array(spec.h0(step.k), dtype=complex)
    e_terms = []
    for l in range(1, step.k):
        for i in range(step.q, step.q + step.k - l + 1):
            sub = IntervalSupport(i, l)
            m = table.matrix(sub)
            res = blockdiag_residual(m, spec.vacuum(l))
            if res > residual_tol:
                raise PreconditionError(f"entry {sub} not block-diagonal (residual {res:.3e}) at step {step}")
            if not m.any():
                continue
            g += table.tau * embed_matrix(m, sub, interval, d)
            e_terms.append(table.vacuum_expectations[sub])
    e = table.tau * complex(math.fsum(z.real for z in e_terms) + 1j * math.fsum(z.imag for z in e_terms))
    return LocalOperator(interval, g), e


# ---------------------------------------------------------------------------
# Lie-Schwinger series


class _Generator:
    """Rank-two operator ``u v† - v w†`` and its adjoint action."""

    def __init__(self, u, w, vac):
        self.u, self.w, self.vac = u, w, vac

    def ad(self, x: np.ndarray) -> np.ndarray:
        v, u, w = self.vac, self.u, self.w
        vx = v.conj() @ x
        wx = w.conj() @ x
        xu = x @ u
        xv = x @ v
        return np.outer(u, vx) - np.outer(v, wx) - np.outer(xu, v.conj()) + np.outer(xv, w.conj())

    def norm(self) -> float:
        a = np.stack([self.u, -self.vac], axis=1)
        b = np.stack([self.vac, self.w], axis=1)
        m = (a.conj().T @ a) @ (b.conj().T @ b)
        return float(math.sqrt(max(np.max(np.abs(np.linalg.eigvals(m))), 0.0)))

    def matrix(self) -> np.ndarray:
        return np.outer(self.u, self.vac.conj()) - np.outer(self.vac, self.w.conj())


def _diag_part(x: np.ndarray, vac: np.ndarray) -> np.ndarray:
    """``P+ X P+ + P- X P-``."""
    xv = x @ vac
    vx = vac.conj() @ x
    c = vac.conj() @ xv
    return x - np.outer(vac, vx) - np.outer(xv, vac.conj()) + 2 * c * np.outer(vac, vac.conj())


def _offdiag_part(x: np.ndarray, vac: np.ndarray) -> np.ndarray:
    return x - _diag_part(x, vac)


def _certified_order(v_norm: float, a: float, tau_abs: float, tol: float, j_max: int):
    """Smallest ``j`` whose majorant tail is below ``tol``, or ``None`` outside the disk."""
    try:
        for j in range(1, j_max + 1):
            t = bj_tail(v_norm, a, tau_abs, j)
            if t < tol:
                return j, t
    except OutOfDiskError:
        return None
    return None


def lie_schwinger_series(g: LocalOperator, e: complex, v: LocalOperator, proj: VacuumProjectors,
                         cfg: EngineConfig, spec: ChainSpec):
    """Generator ``S`` and block-diagonal remainder for ``G + τ V``.

    The order-``j`` coefficients ``V_j`` satisfy ``V_1 = V`` and, for ``j ≥ 2``,

        V_j = Σ_{p≥2} A^{(p)}_j / p! + Σ_{p≥1} B^{(p)}_{j-1} / p!

    where ``A^{(p)}_m`` (``B^{(p)}_m``) is the sum over compositions of ``m``
    into ``p`` parts of nested ``ad S_r`` applied to ``G`` (to ``V``). Since
    ``ad S_j (G) = -offdiag(V_j)`` the ``A`` terms never touch ``G`` directly.

    Returns ``(s, v_diag, diagnostics)``.
    """
    tau = complex(cfg.tau)
    tau_abs = abs(tau)
    vac = proj.vacuum
    sup = v.support
    vm = np.asarray(v.matrix, dtype=complex)
    diag = SeriesDiagnostics(delta=delta_of_tau(tau_abs))
    v_norm = weighted_norm_matrix(vm, sup.edges, spec)
    diag.v_weighted_norm = v_norm

    dim = vm.shape[0]
    if v_norm == 0.0:
        diag.tail_estimate = 0.0
        return (LocalOperator(sup, np.zeros((dim, dim), dtype=complex)), LocalOperator(sup, vm), diag)

    resolvent = ReducedResolvent(g.matrix, e, 0.0, vac, cfg.rcond_threshold)
    diag.rcond = float(resolvent.rcond)

    certified = None
    if tau_abs > 0:
        certified = _certified_order(v_norm, cfg.majorant_a(), tau_abs, cfg.tail_tol, cfg.j_max)

    snorm_factor = 2 * math.sqrt(2) / diag.delta if diag.delta > 0 else math.inf
    a_terms: dict[tuple[int, int], np.ndarray] = {}
    b_terms: dict[tuple[int, int], np.ndarray] = {(0, 0): vm}
    gens: dict[int, _Generator] = {}
    u_tot = np.zeros(dim, dtype=complex)
    w_tot = np.zeros(dim, dtype=complex)
    v_diag = np.zeros_like(vm)
    weighted_terms = []
    tail = math.inf
    j = 0
    while True:
        j += 1
        if j == 1:
            vj = vm
        else:
            vj = np.zeros_like(vm)
            for p in range(2, j + 1):
                acc = np.zeros_like(vm)
                for r in range(1, j - p + 2):
                    prev = a_terms.get((p - 1, j - r))
                    if prev is not None:
                        acc += gens[r].ad(prev)
                a_terms[(p, j)] = acc
                vj += acc / math.factorial(p)
            m = j - 1
            for p in range(1, j):
                acc = np.zeros_like(vm)
                for r in range(1, m - p + 2):
                    prev = b_terms.get((p - 1, m - r))
                    if prev is not None:
                        acc += gens[r].ad(prev)
                b_terms[(p, m)] = acc
                vj += acc / math.factorial(p)
        u = resolvent.apply(vj @ vac)
        w = resolvent.apply_adjoint(vj.conj().T @ vac)
        gens[j] = _Generator(u, w, vac)
        a_terms[(1, j)] = -_offdiag_part(vj, vac)

        wn = weighted_norm_matrix(vj, sup.edges, spec)
        weighted_terms.append(tau_abs ** (j - 1) * wn)
        if gens[j].norm() > snorm_factor * wn + 1e-12:
            diag.snorm_violations += 1
        u_tot += tau**j * u
        w_tot += tau.conjugate() ** j * w
        v_diag += tau ** (j - 1) * _diag_part(vj, vac)

        if tau_abs == 0:
            tail = 0.0
            break
        empirical = _empirical_tail(weighted_terms)
        if certified is not None and j >= certified[0] and empirical <= cfg.tail_tol:
            tail = certified[1]
            diag.certified = True
            break
        if certified is None and empirical <= cfg.tail_tol:
            tail = empirical
            diag.certified = False
            break
        if j >= cfg.j_max:
            raise NonConvergenceError(
                f"Lie-Schwinger series not converged after {j} orders on {sup} "
                f"(tail estimate {empirical:.3e}, |tau| = {tau_abs:g})")

    s = _Generator(u_tot, w_tot, vac)
    diag.j_used = j
    diag.tail_estimate = float(tail)
    diag.s_norm = s.norm()
    diag.v_diag_weighted_norm = weighted_norm_matrix(v_diag, sup.edges, spec)
    return LocalOperator(sup, s.matrix()), LocalOperator(sup, v_diag), diag


def _empirical_tail(terms: list) -> float:
    """Geometric extrapolation of the remaining ``Σ |τ|^{j-1} ‖V_j‖`` from the last terms."""
    if len(terms) < 2:
        return math.inf
    last = terms[-1]
    if last == 0.0:
        return 0.0 if terms[-2] == 0.0 or len(terms) >= 3 else math.inf
    ratios = []
    for a, b in zip(terms[-3:-1], terms[-2:]):
        ratios.append(math.inf if a == 0.0 else b / a)
    rho = max(ratios)
    if rho >= 1:
        return math.inf
    return last * rho / (1 - rho)


# ---------------------------------------------------------------------------
# α-update of the potential table


def conjugation_series(s: np.ndarray, offset: int, s_sites: int, x: np.ndarray, total_sites: int,
                       d: int, tol: float, max_terms: int) -> tuple[np.ndarray, int]:
    """``Σ_{n≥1} adⁿ_S(X)/n!`` with ``S`` acting on a sub-block of ``X``'s interval."""
    scale = max(1.0, float(np.linalg.norm(x)))
    term = x
    total = np.zeros_like(x)
    for n in range(1, max_terms + 1):
        term = (act_left(s, offset, s_sites, term, total_sites, d)
                - act_right(s, offset, s_sites, term, total_sites, d)) / n
        total += term
        if np.linalg.norm(term) < tol * scale:
            return total, n
    raise NonConvergenceError(f"adjoint exponential series not converged in {max_terms} terms")


def absorbed_intervals(container: IntervalSupport, interval: IntervalSupport) -> list[IntervalSupport]:
    """Overlapping entries whose union with ``interval`` is exactly ``container``."""
    k, q = interval.edges, interval.left
    l, i = container.edges, container.left
    if not container.strictly_contains(interval):
        return []
    if i == q:
        return [IntervalSupport(i + j, l - j) for j in range(1, k + 1)]
    if container.right == interval.right:
        return [IntervalSupport(i, l - j) for j in range(1, k + 1)]
    return []


def apply_alpha(table: PotentialTable, step: StepIndex, s: LocalOperator, v_diag: LocalOperator,
                spec: ChainSpec, tail_tol: float = 1e-14, max_terms: int = 60,
                stats: Optional[dict] = None) -> PotentialTable:
    """New table after conjugating the Hamiltonian by ``e^S``.

    The entry of the step interval becomes ``v_diag``; each strictly containing
    entry ``C`` becomes ``e^S (V_C + Σ V_J) e^{-S} - Σ V_J`` where ``J`` runs
    over the overlapping entries absorbed by ``C``. All other entries are
    untouched.
    """
    interval = step.support
    if s.support != interval:
        raise PreconditionError("generator must live on the step interval")
    d = spec.local_dim
    changes = {interval: v_diag.matrix}
    smat = s.matrix
    s_zero = not smat.any()
    n_used = 0
    for container in sorted(table.entries):
        if not container.strictly_contains(interval):
            continue
        x = np.array(table.matrix(container))
        for j in absorbed_intervals(container, interval):
            mj = table.matrix(j)
            if mj.any():
                x += embed_matrix(mj, j, container, d)
        if s_zero or not x.any():
            continue
        delta, n = conjugation_series(smat, interval.left - container.left, interval.n_sites, x,
                                      container.n_sites, d, tail_tol, max_terms)
        n_used = max(n_used, n)
        changes[container] = table.matrix(container) + delta
    if stats is not None:
        stats["ad_terms_max"] = n_used
    return table.updated(changes, step, spec)


# ---------------------------------------------------------------------------
# driver


@dataclass
class StepRecord:
    step: StepIndex
    g: LocalOperator
    e: complex
    s: LocalOperator
    v_diag: LocalOperator
    diagnostics: SeriesDiagnostics
    before: PotentialTable
    after: PotentialTable


def _interval_gap(g: np.ndarray, e: complex, tau: complex, v_diag: np.ndarray, vac: np.ndarray) -> float:
    """Distance from the vacuum eigenvalue to the excited spectrum of ``G + τ v_diag``."""
    m = g + tau * v_diag
    e_vac = complex(vac.conj() @ m @ vac)
    q = np.linalg.svd(vac.conj()[None, :])[2][1:].conj().T
    block = q.conj().T @ m @ q
    if block.size == 0:
        return math.inf
    return float(np.min(np.abs(np.linalg.eigvals(block) - e_vac)))


def iterate_steps(spec: ChainSpec, cfg: EngineConfig, table: Optional[PotentialTable] = None,
                  ) -> Iterator[StepRecord]:
    """Run the steps after ``table.step`` (all steps when ``table`` is None), yielding each one."""
    if table is None:
        table = initial_table(spec, cfg.tau)
    for step in step_sequence(spec.n_sites):
        if table.step != INITIAL_STEP and step <= table.step:
            continue
        interval = step.support
        g, e = build_g(table, step, spec, cfg.residual_tol)
        proj = vacuum_projectors(interval, spec)
        v = table.entries[interval]
        s, v_diag, diag = lie_schwinger_series(g, e, v, proj, cfg, spec)
        diag.step = str(step)
        stats = {}
        new = apply_alpha(table, step, s, v_diag, spec, cfg.tail_tol, cfg.ad_max_terms, stats)
        diag.ad_terms_max = stats["ad_terms_max"]
        diag.interval_gap = _interval_gap(g.matrix, e, cfg.tau, v_diag.matrix, proj.vacuum)
        if cfg.neumann_check:
            direct = ReducedResolvent(g.matrix, e, 0.0, proj.vacuum).matrix()
            series, _, _ = neumann_reduced_resolvent(spec.h0(step.k), g.matrix, e, 0.0, proj.vacuum)
            diag.neumann_deviation = operator_norm(series - direct)
        yield StepRecord(step, g, e, s, v_diag, diag, table, new)
        table = new


@dataclass
class RunReport:
    tau: complex
    n_sites: int
    e_n: complex
    gap_margin: float
    blockdiag_residual: float
    per_length_norms: list
    t0_estimate: float
    diagnostics: list
    wall_time: float
    vacuum_energy_residual: float = math.nan
    conjugation_residual: Optional[float] = None
    unitarity_residual: Optional[float] = None
    final_table: Optional[PotentialTable] = field(default=None, repr=False)
    u: Optional[np.ndarray] = field(default=None, repr=False)
    u_inv: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "tau": encode_complex(self.tau),
            "n_sites": self.n_sites,
            "e_n": encode_complex(self.e_n),
            "gap_margin": self.gap_margin,
            "blockdiag_residual": self.blockdiag_residual,
            "vacuum_energy_residual": self.vacuum_energy_residual,
            "per_length_norms": self.per_length_norms,
            "t0_estimate": self.t0_estimate,
            "conjugation_residual": self.conjugation_residual,
            "unitarity_residual": self.unitarity_residual,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "wall_time": self.wall_time,
        }


def final_hamiltonian(spec: ChainSpec, table: PotentialTable) -> np.ndarray:
    """Dense ``Σ H_i + τ Σ V`` on the whole chain from the table entries."""
    whole = IntervalSupport(1, spec.n_sites - 1)
    m = np.array(spec.h0(whole.edges), dtype=complex)
    for sup in sorted(table.entries):
        mat = table.matrix(sup)
        if mat.any():
            m += table.tau * embed_matrix(mat, sup, whole, spec.local_dim)
    return m


def per_length_norms(spec: ChainSpec, table: PotentialTable) -> list[dict]:
    tau_abs = abs(table.tau)
    out = []
    for l in range(1, spec.n_sites):
        norms = [weighted_norm_matrix(table.matrix(IntervalSupport(i, l)), l, spec)
                 for i in range(1, spec.n_sites - l + 1)]
        bound = tau_abs ** ((l - 1) / 4) if l > 1 or tau_abs > 0 else 1.0
        out.append({"length": l, "max_weighted_norm": max(norms), "paper_bound": bound})
    return out


def run_blockdiag(spec: ChainSpec, cfg: EngineConfig, resume: Optional["Checkpoint"] = None,
                  checkpoint_path=None) -> RunReport:
    """Run every step and summarise the final table.

    With ``resume`` the run continues after the checkpointed step. With
    ``checkpoint_path`` a checkpoint is written after each step.
    """
    start = time.perf_counter()
    n = spec.n_sites
    d = spec.local_dim
    full_dim = d**n
    if cfg.track_u and full_dim > cfg.u_cap:
        raise DimensionCapError(f"U_N tracking needs dimension {full_dim} > cap {cfg.u_cap}")
    table = resume.table if resume is not None else None
    diagnostics = list(resume.diagnostics) if resume is not None else []
    u = u_inv = None
    if cfg.track_u:
        if resume is not None and resume.u is not None:
            u, u_inv = resume.u.copy(), resume.u_inv.copy()
        else:
            u = np.eye(full_dim, dtype=complex)
            u_inv = np.eye(full_dim, dtype=complex)
    if table is None:
        table = initial_table(spec, cfg.tau)
    for rec in iterate_steps(spec, cfg, table):
        diagnostics.append(rec.diagnostics)
        if cfg.track_u and rec.s.matrix.any():
            off = rec.step.q - 1
            u = act_right(matrix_exponential(-rec.s.matrix), off, rec.step.k + 1, u, n, d)
            u_inv = act_left(matrix_exponential(rec.s.matrix), off, rec.step.k + 1, u_inv, n, d)
        table = rec.after
        if checkpoint_path is not None:
            save_checkpoint(Checkpoint(table, diagnostics, u, u_inv), checkpoint_path)

    e_n = table.energy()
    whole_vac = spec.vacuum(n - 1)
    residual = max(blockdiag_residual(table.matrix(sup), spec.vacuum(sup.edges)) for sup in table.entries)
    conj_res = unit_res = None
    vac_res = math.nan
    if full_dim <= cfg.u_cap:
        k_tilde = final_hamiltonian(spec, table)
        vac_res = abs(vacuum_expectation(k_tilde, whole_vac) - e_n)
        if cfg.track_u:
            from .models import assemble_full_hamiltonian
            k_full = assemble_full_hamiltonian(spec, cfg.tau, cap=cfg.u_cap).matrix
            conj_res = operator_norm(u_inv @ k_full @ u - k_tilde)
            unit_res = operator_norm(u.conj().T @ u - np.eye(full_dim))
    gap = diagnostics[-1].interval_gap if diagnostics else math.inf
    return RunReport(
        tau=cfg.tau, n_sites=n, e_n=e_n, gap_margin=gap, blockdiag_residual=residual,
        per_length_norms=per_length_norms(spec, table), t0_estimate=_default_estimate().t0,
        diagnostics=diagnostics, wall_time=time.perf_counter() - start,
        vacuum_energy_residual=vac_res, conjugation_residual=conj_res, unitarity_residual=unit_res,
        final_table=table, u=u, u_inv=u_inv,
    )


# ---------------------------------------------------------------------------
# checkpoints


@dataclass
class Checkpoint:
    table: PotentialTable
    diagnostics: list
    u: Optional[np.ndarray] = None
    u_inv: Optional[np.ndarray] = None


def save_checkpoint(cp: Checkpoint, path) -> None:
    t = cp.table
    data = {
        "step": [t.step.k, t.step.q],
        "tau": encode_complex(t.tau),
        "entries": [
            {"left": s.left, "edges": s.edges, "matrix": encode_matrix(t.matrix(s)),
             "expectation": encode_complex(t.vacuum_expectations[s])}
            for s in sorted(t.entries)
        ],
        "diagnostics": [d.to_dict() for d in cp.diagnostics],
        "u": None if cp.u is None else encode_matrix(cp.u),
        "u_inv": None if cp.u_inv is None else encode_matrix(cp.u_inv),
    }
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(data))
    tmp.replace(path)


def load_checkpoint(path) -> Checkpoint:
    data = json.loads(Path(path).read_text())
    entries = {}
    expect = {}
    for item in data["entries"]:
        sup = IntervalSupport(item["left"], item["edges"])
        entries[sup] = LocalOperator(sup, decode_matrix(item["matrix"]))
        expect[sup] = decode_complex(item["expectation"])
    table = PotentialTable(entries, expect, StepIndex(*data["step"]), decode_complex(data["tau"]))
    diags = [SeriesDiagnostics(**d) for d in data["diagnostics"]]
    u = None if data["u"] is None else decode_matrix(data["u"])
    u_inv = None if data["u_inv"] is None else decode_matrix(data["u_inv"])
    return Checkpoint(table, diags, u, u_inv)
