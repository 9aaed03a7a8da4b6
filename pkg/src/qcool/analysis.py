"""Closed-form transition-rate predictions, rescaled population curves,
curve-collapse metrics, and resonance-channel diagnostics.

Rate conventions.  A two-level pair coupled with matrix element g oscillates
as sin^2(g t), so the first full transfer happens at t = pi / (2 g).  The
flat-profile product formula below equals that matrix element directly.  The
triangle-profile product formula as printed overestimates the dynamical
matrix element by a uniform factor of 1/lam (in spacing units) for every even
n; `chain_rate` returns the dynamically correct single-path product for both
profiles, which is what the curve rescaling uses.  The collapse test plus the
first-maximum position adjudicate this empirically (see tests).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import EvolutionEngine, StateVector, evolve
from .model import CavityBank, ProblemHamiltonian, TransitionTerm
from .problems import ChainProblem, chain_encode

TAU_MAX = 1.2
TAU_POINTS = 241


def omega_flat(n: int, lam: float) -> float:
    """Flat-profile n-th order rate: lam**n in spacing units."""
    if n < 2:
        raise ValueError("flat-profile transitions need n >= 2")
    if not 0 < lam <= 1:
        raise ValueError("coupling must satisfy 0 < lam <= 1")
    if lam >= 0.5:
        warnings.warn(
            f"lam = {lam} is outside the perturbative regime; the rate "
            "formula is unreliable",
            stacklevel=2,
        )
    return float(lam ** n)


def omega_triangle(n: int, lam: float) -> float:
    """Triangle-profile product formula:
    (prod_{k=1}^{n/2-1} lam/k)**2 * lam/(n/2), empty product = 1."""
    if n < 2 or n % 2:
        raise ValueError("triangle-profile transitions need even n >= 2")
    if not 0 < lam <= 1:
        raise ValueError("coupling must satisfy 0 < lam <= 1")
    if lam >= 0.5:
        warnings.warn(
            f"lam = {lam} is outside the perturbative regime; the rate "
            "formula is unreliable",
            stacklevel=2,
        )
    half = n // 2
    prod = 1.0
    for k in range(1, half):
        prod *= lam / k
    return float(prod * prod * lam / half)


def chain_rate(profile: str, n: int, lam: float) -> float:
    """Single-path perturbative matrix element lam**n / prod_j |E0 - E_j|
    over the interior levels; this is the sin^2 rate the dynamics follows.

    Equals omega_flat for the flat profile and lam * omega_triangle for the
    triangle profile (the interior energy product telescopes to
    ((n/2-1)!)**2 * (n/2) there).
    """
    energies = ChainProblem(n, profile).energies()
    denom = np.prod(energies[1:-1] - energies[0])
    return float(lam ** n / abs(denom)) if n > 1 else float(lam)


def grover_rate(n_qubits: int, n_solutions: int, lam: float) -> tuple:
    """Search-transfer rates: (exact, approximate).

    exact  = lam * sqrt(n0 (2^N - n0)) / 2^N  (the projector matrix element
             between the solution and non-solution uniform superpositions)
    approx = lam * sqrt(n0) * 2^(-N/2), valid for n0 << 2^N.
    """
    dim = 2 ** n_qubits
    if not 1 <= n_solutions < dim:
        raise ValueError(f"solution count must lie in [1, {dim - 1}]")
    exact = lam * np.sqrt(n_solutions * (dim - n_solutions)) / dim
    approx = lam * np.sqrt(n_solutions) * 2.0 ** (-n_qubits / 2.0)
    return float(exact), float(approx)


@dataclass(frozen=True)
class PopulationCurve:
    """Transfer population on a rescaled time grid tau = t * rate / pi."""

    tau: np.ndarray
    population: np.ndarray
    n: int
    profile: str
    rate: float

    def __post_init__(self):
        if np.any(self.population < -1e-9) or np.any(self.population > 1 + 1e-9):
            raise ValueError("populations must lie in [0, 1]")


def simulate_chain_curve(
    p: ChainProblem,
    lam: float,
    n_points: int = TAU_POINTS,
    tau_max: float = TAU_MAX,
    engine: EvolutionEngine | None = None,
) -> PopulationCurve:
    """Evolve the first chain level and sample the last-level population on
    the rescaled grid tau in [0, tau_max]."""
    engine = engine or EvolutionEngine()
    H = chain_encode(p, lam)
    rate = chain_rate(p.profile, p.n, lam)
    tau = np.linspace(0.0, tau_max, n_points)
    evals, evecs = H.eigensystem()
    coeff = evecs.conj().T[:, 0]  # overlap of each eigenvector with level 0
    target_row = evecs[p.n, :]
    pops = np.empty(n_points)
    for i, tv in enumerate(tau):
        amp = target_row @ (np.exp(-1j * (tv * np.pi / rate) * evals) * coeff)
        pops[i] = min(1.0, abs(amp) ** 2)
    return PopulationCurve(tau, pops, p.n, p.profile, rate)


def collapse_metric(curves) -> float:
    """Maximum pointwise spread (max - min) across curves on a shared grid."""
    curves = list(curves)
    if len(curves) < 2:
        raise ValueError("need at least two curves")
    grid = curves[0].tau
    for c in curves[1:]:
        if c.tau.shape != grid.shape or not np.allclose(c.tau, grid):
            raise ValueError("curves must share a common tau grid")
    stack = np.vstack([c.population for c in curves])
    return float((stack.max(axis=0) - stack.min(axis=0)).max())


def first_maximum_time(H, psi0: StateVector, target_indices, t_guess: float,
                       engine: EvolutionEngine | None = None) -> float:
    """Time of the first maximum of the summed population on the target basis
    states, located by golden-section search around a coarse scan near
    t_guess."""
    engine = engine or EvolutionEngine()
    targets = np.atleast_1d(np.asarray(target_indices, dtype=np.int64))

    def pop(t):
        if t <= 0.0:
            return 0.0
        psi = evolve(H, psi0, t, engine)
        return float(np.sum(np.abs(psi.amplitudes[targets]) ** 2))

    ts = np.linspace(0.5 * t_guess, 1.5 * t_guess, 41)
    vals = [pop(t) for t in ts]
    k = int(np.argmax(vals))
    lo = ts[max(0, k - 1)]
    hi = ts[min(len(ts) - 1, k + 1)]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = pop(c), pop(d)
    while b - a > 1e-6 * t_guess:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = pop(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = pop(d)
    return float((a + b) / 2.0)


# ---------------------------------------------------------------------------
# resonance-channel diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionChannel:
    """Candidate multi-hop photon-emitting channel (diagnostic record)."""

    z_start: int
    z_end: int
    mode: int       # 1-based cavity mode index
    order: int      # number of hops
    prominent: bool  # first/last hop detunings match (lambda-type condition)


def _adjacency(transition: TransitionTerm):
    mat = transition.matrix.csr
    return [mat.indices[mat.indptr[i]: mat.indptr[i + 1]] for i in range(mat.shape[0])]


def local_minima(problem: ProblemHamiltonian, transition: TransitionTerm) -> np.ndarray:
    """Words with no strictly lower-energy neighbor under the transition graph."""
    adj = _adjacency(transition)
    e = problem.energies
    return np.array(
        [z for z in range(problem.dim) if all(e[w] >= e[z] for w in adj[z])],
        dtype=np.int64,
    )


def lambda_transition_scan(
    problem: ProblemHamiltonian,
    transition: TransitionTerm,
    cavities: CavityBank,
    lam: float,
    n_max: int = 2,
    starts=None,
) -> list:
    """Enumerate candidate (z_start, z_end, mode) emission channels.

    A channel is reported when z_end is reachable from z_start in
    2 <= order <= n_max hops of the transition graph and the endpoint
    resonance |E(start) - E(end) - w_m| <= lam holds.  Channels whose first
    and last hop detunings also match within lam (the condition that makes
    the transition survive the level shifts) are flagged prominent.  Purely
    diagnostic; the dynamics never consults this.
    """
    if cavities.n_modes == 0:
        return []
    adj = _adjacency(transition)
    e = problem.energies.astype(np.float64)
    if starts is None:
        starts = local_minima(problem, transition)
    channels = []
    for z0 in starts:
        # breadth-first wavefront up to n_max hops, keeping one witness path
        frontier = {int(z0): [int(z0)]}
        seen = {int(z0)}
        for order in range(1, n_max + 1):
            nxt = {}
            for z, path in frontier.items():
                for w in adj[z]:
                    w = int(w)
                    if w not in seen:
                        nxt[w] = path + [w]
            seen |= set(nxt)
            if order < 2:
                frontier = nxt
                continue
            for zn, path in nxt.items():
                for m, w in enumerate(cavities.frequencies, start=1):
                    if abs(e[z0] - e[zn] - w) <= lam:
                        first_step = e[path[1]] - e[z0]
                        last_step = e[path[-2]] - e[zn] + w
                        channels.append(
                            TransitionChannel(
                                int(z0), zn, m, order,
                                bool(abs(first_step - last_step) <= lam),
                            )
                        )
            frontier = nxt
    return channels
