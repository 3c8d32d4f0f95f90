"""Independent oracles for the block-diagonalization: dense spectra, direct
conjugation, resolvent expansions, Taylor coefficients and finite-size scaling.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .engine import (
    EngineConfig,
    PotentialTable,
    RunReport,
    StepRecord,
    absorbed_intervals,
    final_hamiltonian,
    iterate_steps,
    run_blockdiag,
)
from .errors import DimensionCapError, LSChainError
from .majorant import delta_of_tau, resolvent_bound, tau_domain_estimate, thermo_majorant
from .models import (
    DEFAULT_DIM_CAP,
    ChainSpec,
    FullHamiltonian,
    assemble_full_hamiltonian,
    spec_to_dict,
)
from .numio import encode_complex
from .operators import (
    IntervalSupport,
    ReducedResolvent,
    VacuumProjectors,
    complement_basis,
    embed_matrix,
    matrix_exponential,
    neumann_reduced_resolvent,
    operator_norm,
)

GAP_TARGET = 0.5
GAP_SLACK = 1e-9


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    hermitian: bool


def exact_spectrum(k, cap: int = DEFAULT_DIM_CAP, hermitian_tol: float = 1e-12) -> SpectrumResult:
    """All eigenvalues of a dense matrix, sorted by real then imaginary part."""
    m = k.matrix if isinstance(k, FullHamiltonian) else np.asarray(k)
    if m.shape[0] > cap:
        raise DimensionCapError(f"dimension {m.shape[0]} exceeds cap {cap}")
    hermitian = bool(np.allclose(m, m.conj().T, atol=hermitian_tol, rtol=0))
    if hermitian:
        ev = np.linalg.eigvalsh(m).astype(complex)
    else:
        ev = np.linalg.eigvals(m)
        ev = ev[np.lexsort((ev.imag, ev.real))]
    return SpectrumResult(ev, hermitian)


def nearest_eigenvalue(spectrum: SpectrumResult, target: complex, collision: float = 1e-6):
    """Eigenvalue nearest ``target``, its distance, isolation from the rest and a collision flag."""
    ev = spectrum.eigenvalues
    dist = np.abs(ev - target)
    i = int(np.argmin(dist))
    rest = np.delete(ev, i)
    isolation = float(np.min(np.abs(rest - ev[i]))) if rest.size else math.inf
    collided = bool(np.sum(dist < collision) > 1)
    return complex(ev[i]), float(dist[i]), isolation, collided


def excited_block(m: np.ndarray, vac: np.ndarray) -> np.ndarray:
    q = complement_basis(vac)
    if q is None:
        return m[1:, 1:]
    return q.conj().T @ m @ q


def check_gap(spec: ChainSpec, cfg: EngineConfig, report: RunReport, cap: int = DEFAULT_DIM_CAP):
    """Distance from ``E_N`` to the spectrum of the final Hamiltonian off the chain vacuum."""
    if spec.local_dim**spec.n_sites > cap:
        raise DimensionCapError("gap check needs the full final Hamiltonian")
    k_tilde = final_hamiltonian(spec, report.final_table)
    block = excited_block(k_tilde, spec.vacuum(spec.n_sites - 1))
    if block.size == 0:
        return math.inf, True
    margin = float(np.min(np.abs(np.linalg.eigvals(block) - report.e_n)))
    return margin, margin >= GAP_TARGET - GAP_SLACK


def vacuum_column_residual(spec: ChainSpec, report: RunReport) -> float:
    """``‖K̃ P_vac - E_N P_vac‖``."""
    k_tilde = final_hamiltonian(spec, report.final_table)
    vac = spec.vacuum(spec.n_sites - 1)
    return float(np.linalg.norm(k_tilde @ vac - report.e_n * vac))


# ---------------------------------------------------------------------------
# conjugation


def direct_conjugation_check(k_before: np.ndarray, s_embedded: np.ndarray, k_after: np.ndarray) -> float:
    """``‖e^S K e^{-S} - K'‖`` by dense matrix exponentials."""
    if k_before.shape != s_embedded.shape or k_before.shape != k_after.shape:
        raise ValueError("dimension mismatch")
    e_s = matrix_exponential(s_embedded)
    e_ms = matrix_exponential(-s_embedded)
    return operator_norm(e_s @ k_before @ e_ms - k_after)


def unitarity_check(u: np.ndarray) -> float:
    return operator_norm(u.conj().T @ u - np.eye(u.shape[0]))


@dataclass
class StepAudit:
    step: str
    entry_residuals: dict
    untouched_identical: bool
    full_residual: Optional[float]
    k_norm: Optional[float]

    @property
    def max_entry_residual(self) -> float:
        return max(self.entry_residuals.values(), default=0.0)


def audit_step(rec: StepRecord, spec: ChainSpec, full_cap: int = DEFAULT_DIM_CAP) -> StepAudit:
    """Compare one engine step with direct matrix-exponential conjugation.

    For every strictly containing entry ``C`` the reference is
    ``e^S (V_C + Σ V_J) e^{-S} - Σ V_J``; for the step interval it is
    ``e^S (G + τ V) e^{-S}`` against ``G + τ v_diag``.
    """
    d = spec.local_dim
    tau = rec.before.tau
    interval = rec.step.support
    residuals = {}
    s = rec.s.matrix
    top = rec.g.matrix + tau * rec.before.matrix(interval)
    e_s, e_ms = matrix_exponential(s), matrix_exponential(-s)
    residuals[str(interval)] = operator_norm(e_s @ top @ e_ms - (rec.g.matrix + tau * rec.v_diag.matrix))
    untouched = True
    for sup in sorted(rec.before.entries):
        before = rec.before.matrix(sup)
        after = rec.after.matrix(sup)
        if sup.strictly_contains(interval):
            x = np.array(before)
            absorbed = np.zeros_like(x)
            for j in absorbed_intervals(sup, interval):
                absorbed += embed_matrix(rec.before.matrix(j), j, sup, d)
            s_c = embed_matrix(s, interval, sup, d)
            ref = matrix_exponential(s_c) @ (x + absorbed) @ matrix_exponential(-s_c) - absorbed
            residuals[str(sup)] = operator_norm(ref - after)
        elif sup != interval:
            untouched &= bool(np.array_equal(before, after))
    full = k_norm = None
    if d**spec.n_sites <= full_cap:
        whole = IntervalSupport(1, spec.n_sites - 1)
        k_before = final_hamiltonian(spec, rec.before)
        k_after = final_hamiltonian(spec, rec.after)
        full = direct_conjugation_check(k_before, embed_matrix(s, interval, whole, d), k_after)
        k_norm = operator_norm(k_before)
    return StepAudit(str(rec.step), residuals, untouched, full, k_norm)


# ---------------------------------------------------------------------------
# Neumann expansion of the reduced resolvent


@dataclass
class NeumannReport:
    deviation: float
    resolvent_norms: list
    bound: float
    hypothesis_holds: bool
    bound_satisfied: bool
    kernel_norm: float
    terms: int


def neumann_expansion_check(g: np.ndarray, e: complex, proj: VacuumProjectors, tau: complex,
                            h0: np.ndarray, n_z: int = 8, radius: float = 0.5) -> NeumannReport:
    """Expand the reduced resolvent around the free one and compare with a direct solve.

    The deviation is the largest over ``z = 0`` and ``n_z`` points on ``|z| = radius``;
    the resolvent norm at those points is compared with ``1/Δ(|τ|)``.
    """
    zs = [0.0] + [radius * np.exp(2j * np.pi * p / n_z) for p in range(n_z)]
    deviation = 0.0
    norms = []
    kernel = 0.0
    terms = 0
    for i, z in enumerate(zs):
        direct = ReducedResolvent(g, e, z, proj.vacuum).matrix()
        series, n, kn = neumann_reduced_resolvent(h0, g, e, z, proj.vacuum)
        deviation = max(deviation, operator_norm(series - direct))
        kernel = max(kernel, kn)
        terms = max(terms, n)
        if i > 0:
            norms.append(operator_norm(direct))
    bound = resolvent_bound(abs(tau))
    hypothesis = delta_of_tau(abs(tau)) > 0
    satisfied = bool(hypothesis and max(norms) <= bound)
    return NeumannReport(deviation, norms, bound, bool(hypothesis), satisfied, kernel, terms)


# ---------------------------------------------------------------------------
# analyticity


def cauchy_coefficients(samples: Sequence[complex], radius: float, m: Optional[int] = None) -> np.ndarray:
    """Taylor coefficients ``c_j`` from equispaced samples ``f(r e^{2πip/m})``."""
    samples = np.asarray(samples, dtype=complex)
    m = len(samples) if m is None else m
    if m != len(samples) or m < 16 or m & (m - 1):
        raise ValueError("need a power-of-two number (≥ 16) of samples")
    c = np.fft.fft(samples) / m
    return c / radius ** np.arange(m)


def circle_points(radius: float, m: int) -> np.ndarray:
    return radius * np.exp(2j * np.pi * np.arange(m) / m)


def _energy_job(args):
    spec, cfg = args
    return run_blockdiag(spec, cfg).e_n


def engine_energies(spec: ChainSpec, cfg: EngineConfig, taus: Sequence[complex], workers: int = 1) -> list:
    jobs = [(spec, replace(cfg, tau=complex(t), track_u=False)) for t in taus]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_energy_job, jobs))
    return [_energy_job(j) for j in jobs]


@dataclass
class AnalyticityReport:
    radius: float
    coefficients: np.ndarray
    decay_ratio: float
    cr_residual: float
    max_abs: float
    probe: complex
    samples: np.ndarray = field(repr=False)

    def cauchy_estimate_violation(self, n_check: Optional[int] = None, slack: float = 1e-6) -> float:
        """Largest ``|c_j| r^j / max|E|`` over ``j < n_check``, minus ``1 + slack``."""
        n = len(self.coefficients) // 2 if n_check is None else n_check
        if self.max_abs == 0:
            return float(np.max(np.abs(self.coefficients[:n]))) - 0.0
        ratios = np.abs(self.coefficients[:n]) * self.radius ** np.arange(n) / self.max_abs
        return float(np.max(ratios) - (1 + slack))


def cr_residual(energy, probe: complex, h: float) -> float:
    """``|∂E/∂x + i ∂E/∂y|`` by central differences."""
    ex = (energy(probe + h) - energy(probe - h)) / (2 * h)
    ey = (energy(probe + 1j * h) - energy(probe - 1j * h)) / (2 * h)
    return abs(ex + 1j * ey)


def analyticity_report(spec: ChainSpec, radius: float, m: int = 64, cfg: Optional[EngineConfig] = None,
                       probe: Optional[complex] = None, workers: int = 1) -> AnalyticityReport:
    cfg = cfg or EngineConfig()
    t0 = tau_domain_estimate().t0
    samples = np.array(engine_energies(spec, cfg, circle_points(radius, m), workers))
    coeffs = cauchy_coefficients(samples, radius, m)
    js = np.arange(m // 4, m // 2 + 1)
    with np.errstate(divide="ignore"):
        decay = float(np.max(np.abs(coeffs[js]) ** (1.0 / js)))
    probe = t0 / 4 if probe is None else probe
    h = 1e-5 * t0

    def energy(t):
        return run_blockdiag(spec, replace(cfg, tau=complex(t), track_u=False)).e_n

    return AnalyticityReport(radius, coeffs, decay, cr_residual(energy, probe, h),
                             float(np.max(np.abs(samples))), complex(probe), samples)


# ---------------------------------------------------------------------------
# thermodynamic behaviour


@dataclass
class ThermoReport:
    tau: complex
    n_list: list
    energies: list
    per_site: list
    length_expectations: dict
    decomposition_residuals: list
    site_independence: float
    cauchy_diffs: list
    bound_values: list
    short_chain_energies: dict

    @property
    def all_below_majorant(self) -> bool:
        return all(d <= b for d, b in zip(self.cauchy_diffs, self.bound_values))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["tau"] = encode_complex(self.tau)
        out["energies"] = [encode_complex(e) for e in self.energies]
        out["per_site"] = [encode_complex(e) for e in self.per_site]
        out["length_expectations"] = {str(n): [encode_complex(z) for z in v]
                                      for n, v in self.length_expectations.items()}
        out["short_chain_energies"] = {str(l): encode_complex(z) for l, z in self.short_chain_energies.items()}
        return out


def _thermo_job(args):
    spec, cfg = args
    rep = run_blockdiag(spec, cfg)
    table = rep.final_table
    return rep.e_n, {sup: table.vacuum_expectations[sup] for sup in table.entries}


def thermo_analysis(spec: ChainSpec, tau: complex, n_list: Sequence[int], cfg: Optional[EngineConfig] = None,
                    workers: int = 1) -> ThermoReport:
    """Energy per site along a ladder of chain lengths for a translation-invariant spec."""
    if not spec.translation_invariant:
        raise ValueError("thermodynamic analysis needs a translation-invariant spec")
    n_list = sorted(n_list)
    cfg = replace(cfg or EngineConfig(), tau=complex(tau), track_u=False)
    jobs = [(spec.with_sites(n), cfg) for n in n_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_thermo_job, jobs))
    else:
        results = [_thermo_job(j) for j in jobs]

    energies, per_site, decomp, lengths = [], [], [], {}
    spread = 0.0
    for n, (e_n, expect) in zip(n_list, results):
        per_len = []
        for l in range(1, n):
            vals = np.array([expect[IntervalSupport(i, l)] for i in range(1, n - l + 1)])
            spread = max(spread, float(np.max(np.abs(vals - vals[0]))))
            per_len.append(complex(vals[0]))
        lengths[n] = per_len
        recon = sum((n - l) * tau * per_len[l - 1] for l in range(1, n))
        decomp.append(abs(e_n - recon))
        energies.append(e_n)
        per_site.append(e_n / n)

    diffs, bounds = [], []
    for a in range(len(n_list)):
        for b in range(a + 1, len(n_list)):
            diffs.append(abs(per_site[a] - per_site[b]))
            bounds.append(thermo_majorant(n_list[a], abs(tau)))
    short = {}
    for l in range(1, max(n_list)):
        if l + 1 in n_list:
            short[l] = energies[n_list.index(l + 1)]
    return ThermoReport(complex(tau), list(n_list), energies, per_site, lengths, decomp, spread,
                        diffs, bounds, short)


# ---------------------------------------------------------------------------
# verification suite


@dataclass
class CheckRecord:
    name: str
    inputs_digest: str
    value: float
    bound: float
    passed: bool
    hard: bool = True
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def inputs_digest(spec: ChainSpec, cfg: EngineConfig) -> str:
    payload = {"spec": spec_to_dict(spec),
               "cfg": {k: (encode_complex(v) if isinstance(v, complex) else v) for k, v in asdict(cfg).items()}}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _finite(x) -> float:
    x = float(x)
    return x if math.isfinite(x) else float("inf")


def run_verification_suite(spec: ChainSpec, cfg: EngineConfig, cap: int = DEFAULT_DIM_CAP) -> list[CheckRecord]:
    """Run every applicable check at ``(spec, cfg)``; engine failures become failed hard checks."""
    digest = inputs_digest(spec, cfg)
    records = []

    def add(name, value, bound, passed, hard=True, detail=""):
        records.append(CheckRecord(name, digest, _finite(value), _finite(bound), bool(passed), hard, detail))

    full_ok = spec.local_dim**spec.n_sites <= cap
    real_tau = cfg.tau.imag == 0
    run_cfg = replace(cfg, track_u=full_ok)
    try:
        audits = []
        for rec in iterate_steps(spec, replace(run_cfg, track_u=False)):
            if full_ok:
                audits.append(audit_step(rec, spec, cap))
        report = run_blockdiag(spec, run_cfg)
    except LSChainError as exc:
        add("engine_run", math.inf, 0.0, False, detail=f"{type(exc).__name__}: {exc}")
        return records
    add("engine_run", 0.0, 0.0, True)

    tail_max = max((d.tail_estimate for d in report.diagnostics), default=0.0)
    add("series_tail", tail_max, cfg.tail_tol, tail_max <= cfg.tail_tol)
    norms_ok = all(r["max_weighted_norm"] <= r["paper_bound"] + 1e-12 for r in report.per_length_norms)
    worst = max(r["max_weighted_norm"] - r["paper_bound"] for r in report.per_length_norms)
    add("norm_decay", worst, 1e-12, norms_ok)
    add("blockdiag_residual", report.blockdiag_residual, cfg.residual_tol,
        report.blockdiag_residual <= cfg.residual_tol)

    if full_ok:
        full = assemble_full_hamiltonian(spec, cfg.tau, cap)
        spectrum = exact_spectrum(full, cap)
        ev, dist, iso, collided = nearest_eigenvalue(spectrum, report.e_n)
        add("energy_vs_exact", dist, 1e-8, dist <= 1e-8, detail="collision" if collided else "")
        add("eigenvalue_isolation", iso, GAP_TARGET - GAP_SLACK, iso >= GAP_TARGET - GAP_SLACK)
        if real_tau:
            gs = float(spectrum.eigenvalues[0].real)
            add("ground_state", abs(report.e_n - gs), 1e-8, abs(report.e_n - gs) <= 1e-8)
        margin, ok = check_gap(spec, cfg, report, cap)
        add("gap_margin", margin, GAP_TARGET - GAP_SLACK, ok)
        col = vacuum_column_residual(spec, report)
        add("vacuum_column", col, 1e-9, col <= 1e-9)
        knorm = operator_norm(full.matrix)
        add("conjugation_identity", report.conjugation_residual, 1e-7 * knorm,
            report.conjugation_residual <= 1e-7 * knorm)
        if real_tau:
            add("unitarity", report.unitarity_residual, 1e-9, report.unitarity_residual < 1e-9)
        worst_step = max((a.max_entry_residual for a in audits), default=0.0)
        add("per_step_conjugation", worst_step, 1e-9, worst_step <= 1e-9)
        untouched = all(a.untouched_identical for a in audits)
        add("untouched_entries_identical", 0.0 if untouched else 1.0, 0.0, untouched)
    add("vacuum_energy_additivity", report.vacuum_energy_residual, 1e-10,
        not (report.vacuum_energy_residual > 1e-10))

    conj_report = run_blockdiag(spec, replace(cfg, tau=cfg.tau.conjugate(), track_u=False))
    sym = abs(conj_report.e_n - report.e_n.conjugate())
    add("conjugate_symmetry", sym, 1e-10, sym <= 1e-10)

    est = tau_domain_estimate(spec)
    add("a_equation_residual", est.residual, 1e-12, est.residual < 1e-12)
    inside = abs(cfg.tau) <= est.t0
    add("inside_certified_disk", abs(cfg.tau), est.t0, inside, hard=False)
    return records


def write_verify_report(records: list[CheckRecord], path) -> None:
    Path(path).write_text(json.dumps({"checks": [r.to_dict() for r in records],
                                      "all_hard_passed": all(r.passed for r in records if r.hard)},
                                     indent=1))
