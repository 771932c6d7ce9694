"""Brute-force dense-statevector reference for the swap-level dynamics.

Simulates the actual random circuits on d^n-dimensional state vectors with
freshly sampled Haar gates, estimates ensemble averages by Monte Carlo, and
provides the exact one- and two-copy Haar projections for small systems.

Conventions.  Basis index x encodes site s in digit (x // d^s) % d, so site 0
is least significant.  A gate on a region addresses the region's sites in
ascending order with the lowest site least significant.  Monte Carlo sample s
owns the random stream seeded by (seed, 0, s) (circuit draws) or (seed, 1, s)
(reference Haar states); within one step a sample draws its region first and
its gate Gaussians second, so trajectories of different lengths share their
common prefix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import CapExceeded
from .regions import Region
from .swapcore import CorrelatedSweep, EnsembleSpec, Markov, Uncorrelated

STATE_DIM_CAP = 1 << 20
MATRIX_DIM_CAP = 1 << 10
SUPEROP_DIM_CAP = 1 << 12
_NORM_TOL = 1e-10
_CHUNK_ELEMENTS = 1 << 24  # complex doubles held per batch of states


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleConfig:
    """Seed, sample count and system shape for all Monte Carlo estimators."""

    seed: int
    samples: int
    d: int
    n: int

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("at least 2 samples are required")
        if self.d < 2 or self.n < 1:
            raise ValueError("need d >= 2 and n >= 1")
        if self.d**self.n > STATE_DIM_CAP:
            raise CapExceeded(f"state dimension {self.d}^{self.n} exceeds the cap {STATE_DIM_CAP}")


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo mean with standard error of the mean."""

    mean: float
    stderr: float
    samples: int

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("an estimate needs at least 2 samples")


@dataclass(frozen=True)
class DesignDistance:
    """Trace-norm distance between two Monte Carlo moment averages.

    ``circuit_err`` and ``haar_err`` are half-sample split estimates of the
    sampling error of each side.
    """

    value: float
    circuit_err: float
    haar_err: float
    samples: int


@dataclass(frozen=True)
class DenseState:
    """Normalized complex amplitude vector over n sites of local dimension d."""

    amplitudes: np.ndarray
    n: int
    d: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (self.d**self.n,):
            raise ValueError(f"expected {self.d}^{self.n} amplitudes, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond {_NORM_TOL}")


def product_state(n: int, d: int) -> DenseState:
    """The all-zeros computational basis state."""
    amps = np.zeros(d**n, dtype=complex)
    amps[0] = 1.0
    return DenseState(amps, n, d)


# ---------------------------------------------------------------------------
# Haar sampling and gate application
# ---------------------------------------------------------------------------

def _haar_from_gaussians(z: np.ndarray) -> np.ndarray:
    """Map (..., 2, m, m) standard normals to (..., m, m) Haar unitaries.

    QR of the complex Gaussian matrix, with the R diagonal's phases pushed
    into Q; without that correction the distribution is not Haar.
    """
    g = (z[..., 0, :, :] + 1j * z[..., 1, :, :]) / math.sqrt(2.0)
    q, r = np.linalg.qr(g)
    diag = np.einsum('...ii->...i', r)
    mag = np.abs(diag)
    phases = np.where(mag == 0, 1.0 + 0j, diag / np.where(mag == 0, 1.0, mag))
    return q * phases[..., None, :]


def haar_unitary(m: int, stream: np.random.Generator) -> np.ndarray:
    """One m x m Haar-distributed unitary drawn from the given stream."""
    if m < 1:
        raise ValueError("matrix size must be >= 1")
    return _haar_from_gaussians(stream.standard_normal((2, m, m)))


def _region_perm(n: int, sites: Sequence[int], batched: bool) -> list[int]:
    """Axis order placing the given sites' tensor axes first (highest site leading)."""
    offset = 1 if batched else 0
    in_region = set(sites)
    perm = ([0] if batched else [])
    perm += [offset + n - 1 - s for s in sorted(sites, reverse=True)]
    perm += [offset + n - 1 - s for s in range(n - 1, -1, -1) if s not in in_region]
    return perm


def _apply_gates_batch(states: np.ndarray, sites: Sequence[int], gates: np.ndarray,
                       n: int, d: int) -> np.ndarray:
    """Apply per-sample gates on the given sites to a (samples, d^n) batch."""
    c = states.shape[0]
    dm = d ** len(sites)
    perm = _region_perm(n, sites, batched=True)
    t = states.reshape((c,) + (d,) * n).transpose(perm).reshape(c, dm, -1)
    t = gates @ t
    return t.reshape((c,) + (d,) * n).transpose(np.argsort(perm)).reshape(c, -1)


def apply_gate(state: DenseState, region: Region, gate: np.ndarray) -> DenseState:
    """Apply a d^|region|-dimensional gate to the region's tensor factors."""
    if region.n != state.n:
        raise ValueError("region universe does not match the state")
    dm = state.d**region.size
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (dm, dm):
        raise ValueError(f"gate shape {gate.shape} does not match region dimension {dm}")
    out = _apply_gates_batch(state.amplitudes[None, :], region.sites(), gate[None, :, :],
                             state.n, state.d)
    return DenseState(out[0], state.n, state.d)


def _region_factors(states: np.ndarray, sites: Sequence[int], n: int, d: int) -> np.ndarray:
    """Reshape a (samples, d^n) batch into (samples, d^|sites|, d^rest) matrices."""
    c = states.shape[0]
    dm = d ** len(sites)
    perm = _region_perm(n, sites, batched=True)
    return states.reshape((c,) + (d,) * n).transpose(perm).reshape(c, dm, -1)


def _purity_batch(states: np.ndarray, sites: Sequence[int], n: int, d: int) -> np.ndarray:
    m = _region_factors(states, sites, n, d)
    g = np.einsum('sab,scb->sac', m, m.conj())
    return np.einsum('sac,sac->s', g, g.conj()).real


def _reduced_density_batch(states: np.ndarray, sites: Sequence[int], n: int, d: int) -> np.ndarray:
    m = _region_factors(states, sites, n, d)
    return np.einsum('sab,scb->sac', m, m.conj())


def reduced_purity(state: DenseState, region: Region) -> float:
    """Purity of the reduced state on the region, Tr((M M^dag)^2) for the reshaped amplitudes."""
    if region.n != state.n:
        raise ValueError("region universe does not match the state")
    return float(_purity_batch(state.amplitudes[None, :], region.sites(), state.n, state.d)[0])


# ---------------------------------------------------------------------------
# Region sequence sampling
# ---------------------------------------------------------------------------

def _pick(cum: np.ndarray, u: float) -> int:
    return min(int(np.searchsorted(cum, u, side='right')), len(cum) - 1)


def sample_regions(spec: EnsembleSpec, k: int, stream: np.random.Generator) -> list[Region]:
    """Draw the region sequence of a k-step circuit under the spec's policy.

    Correlated sweeps are deterministic: k repetitions of the ordered pass.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    regions = spec.structure.regions
    pol = spec.policy
    if isinstance(pol, CorrelatedSweep):
        # swap-side composition applies order[0] to the swap first, which the
        # circuit realizes by applying that region's gate last
        return [regions[i] for _ in range(k) for i in reversed(pol.order)]
    out = []
    if isinstance(pol, Uncorrelated):
        for j in range(k):
            cum = np.cumsum(spec.step_weights(j))
            out.append(regions[_pick(cum, stream.random())])
    else:
        cum_rows = [np.cumsum(row) for row in pol.matrix]
        r = _pick(np.cumsum(pol.initial), stream.random()) if k else 0
        if k:
            out.append(regions[r])
        for _ in range(1, k):
            r = _pick(cum_rows[r], stream.random())
            out.append(regions[r])
    return out


# ---------------------------------------------------------------------------
# Batched circuit simulation
# ---------------------------------------------------------------------------

def _simulate(spec: EnsembleSpec, k_max: int, cfg: OracleConfig,
              consume: Callable[[int, np.ndarray, int], None]) -> None:
    """Run all samples for k_max steps, calling consume(j, states, first_index) per step."""
    if spec.structure.n != cfg.n or spec.d != cfg.d:
        raise ValueError("ensemble shape does not match the oracle config")
    n, d = cfg.n, cfg.d
    dim = d**n
    regions = spec.structure.regions
    site_lists = [r.sites() for r in regions]
    pol = spec.policy
    if isinstance(pol, Uncorrelated):
        cums = [np.cumsum(spec.step_weights(j)) for j in range(k_max)]
    elif isinstance(pol, Markov):
        cum_init = np.cumsum(pol.initial)
        cum_rows = [np.cumsum(row) for row in pol.matrix]
    chunk = max(1, min(cfg.samples, _CHUNK_ELEMENTS // dim))
    for lo in range(0, cfg.samples, chunk):
        hi = min(lo + chunk, cfg.samples)
        rngs = [np.random.default_rng((cfg.seed, 0, s)) for s in range(lo, hi)]
        c = hi - lo
        states = np.zeros((c, dim), dtype=complex)
        states[:, 0] = 1.0
        consume(0, states, lo)
        prev = np.zeros(c, dtype=int)
        for j in range(1, k_max + 1):
            if isinstance(pol, CorrelatedSweep):
                for ridx in reversed(pol.order):
                    m = d ** regions[ridx].size
                    z = np.stack([rng.standard_normal((2, m, m)) for rng in rngs])
                    states = _apply_gates_batch(states, site_lists[ridx],
                                                _haar_from_gaussians(z), n, d)
            else:
                ridx = np.empty(c, dtype=int)
                gauss: list[np.ndarray] = []
                for i, rng in enumerate(rngs):
                    u = rng.random()
                    if isinstance(pol, Uncorrelated):
                        r = _pick(cums[j - 1], u)
                    elif j == 1:
                        r = _pick(cum_init, u)
                    else:
                        r = _pick(cum_rows[prev[i]], u)
                    ridx[i] = r
                    m = d ** regions[r].size
                    gauss.append(rng.standard_normal((2, m, m)))
                prev = ridx
                for r in np.unique(ridx):
                    sel = np.flatnonzero(ridx == r)
                    gates = _haar_from_gaussians(np.stack([gauss[i] for i in sel]))
                    states[sel] = _apply_gates_batch(states[sel], site_lists[r], gates, n, d)
            consume(j, states, lo)


def _estimate(values: np.ndarray) -> MomentEstimate:
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1)) / math.sqrt(len(values))
    return MomentEstimate(mean, stderr, len(values))


def mc_purity_trajectory(spec: EnsembleSpec, initial_region: Region, k_max: int,
                         cfg: OracleConfig) -> list[MomentEstimate]:
    """Monte Carlo average purity of the region after 0..k_max ensemble steps.

    Each sample runs one fresh circuit from the all-zeros product state; the
    purity is measured after every step, so the whole trajectory costs one
    pass.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    sites = initial_region.sites()
    values = np.empty((k_max + 1, cfg.samples))

    def consume(j: int, states: np.ndarray, lo: int) -> None:
        values[j, lo:lo + states.shape[0]] = _purity_batch(states, sites, cfg.n, cfg.d)

    _simulate(spec, k_max, cfg, consume)
    return [_estimate(values[j]) for j in range(k_max + 1)]


def mc_average_purity(spec: EnsembleSpec, initial_region: Region, k: int,
                      cfg: OracleConfig) -> MomentEstimate:
    """Monte Carlo estimate of the average purity after exactly k steps."""
    return mc_purity_trajectory(spec, initial_region, k, cfg)[k]


def mc_trace_distance(spec: EnsembleSpec, region: Region, k: int,
                      cfg: OracleConfig) -> MomentEstimate:
    """Average trace-norm distance of the region's reduced state from maximally mixed."""
    if k < 0:
        raise ValueError("k must be >= 0")
    dm = cfg.d**region.size
    if dm > MATRIX_DIM_CAP:
        raise CapExceeded(f"reduced dimension {dm} exceeds the eigensolver cap {MATRIX_DIM_CAP}")
    sites = region.sites()
    values = np.empty(cfg.samples)

    def consume(j: int, states: np.ndarray, lo: int) -> None:
        if j != k:
            return
        rho = _reduced_density_batch(states, sites, cfg.n, cfg.d)
        rho -= np.eye(dm) / dm
        values[lo:lo + states.shape[0]] = np.abs(np.linalg.eigvalsh(rho)).sum(axis=1)

    _simulate(spec, k, cfg, consume)
    return _estimate(values)


def _kron_power_batch(rho: np.ndarray, t: int) -> np.ndarray:
    out = rho
    for _ in range(t - 1):
        c, a, _ = out.shape
        b = rho.shape[1]
        out = np.einsum('sab,scd->sacbd', out, rho).reshape(c, a * b, a * b)
    return out


def _half_split_error(total_first: np.ndarray, total_second: np.ndarray,
                      n_first: int, n_second: int) -> float:
    return trace_norm(total_first / n_first - total_second / n_second) / 2.0


def mc_design_distance(spec: EnsembleSpec, region: Region, k: int, t: int,
                       cfg: OracleConfig) -> DesignDistance:
    """Trace-norm distance between circuit and global-Haar averages of the region's t-th moment.

    Both sides are Monte Carlo: the circuit side runs k-step circuits, the
    reference side draws global Haar states as normalized complex Gaussians.
    """
    if k < 0 or t < 1:
        raise ValueError("need k >= 0 and t >= 1")
    dm = cfg.d**region.size
    if dm**t > MATRIX_DIM_CAP:
        raise CapExceeded(f"moment dimension {dm}^{t} exceeds the cap {MATRIX_DIM_CAP}")
    sites = region.sites()
    dmt = dm**t
    n_first = (cfg.samples + 1) // 2
    halves = [np.zeros((dmt, dmt), dtype=complex) for _ in range(2)]

    def consume(j: int, states: np.ndarray, lo: int) -> None:
        if j != k:
            return
        mom = _kron_power_batch(_reduced_density_batch(states, sites, cfg.n, cfg.d), t)
        cut = min(max(n_first - lo, 0), states.shape[0])
        halves[0] += mom[:cut].sum(axis=0)
        halves[1] += mom[cut:].sum(axis=0)

    _simulate(spec, k, cfg, consume)
    circ_mean = (halves[0] + halves[1]) / cfg.samples
    circ_err = _half_split_error(halves[0], halves[1], n_first, cfg.samples - n_first)

    dim = cfg.d**cfg.n
    haar_halves = [np.zeros((dmt, dmt), dtype=complex) for _ in range(2)]
    chunk = max(1, min(cfg.samples, _CHUNK_ELEMENTS // dim))
    for lo in range(0, cfg.samples, chunk):
        hi = min(lo + chunk, cfg.samples)
        z = np.stack([np.random.default_rng((cfg.seed, 1, s)).standard_normal((2, dim))
                      for s in range(lo, hi)])
        states = z[:, 0, :] + 1j * z[:, 1, :]
        states /= np.linalg.norm(states, axis=1, keepdims=True)
        mom = _kron_power_batch(_reduced_density_batch(states, sites, cfg.n, cfg.d), t)
        cut = min(max(n_first - lo, 0), hi - lo)
        haar_halves[0] += mom[:cut].sum(axis=0)
        haar_halves[1] += mom[cut:].sum(axis=0)
    haar_mean = (haar_halves[0] + haar_halves[1]) / cfg.samples
    haar_err = _half_split_error(haar_halves[0], haar_halves[1], n_first, cfg.samples - n_first)

    return DesignDistance(trace_norm(circ_mean - haar_mean), circ_err, haar_err, cfg.samples)


# ---------------------------------------------------------------------------
# Exact moment projections
# ---------------------------------------------------------------------------

def trace_norm(hermitian: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.abs(np.linalg.eigvalsh(hermitian)).sum())


def _to_blocks(op: np.ndarray, sites: Sequence[int], n: int, d: int):
    """View a d^n x d^n operator as a (Da, Db, Da, Db) block tensor, sites first."""
    row = _region_perm(n, sites, batched=False)
    perm = row + [n + a for a in row]
    da = d ** len(sites)
    t = op.reshape((d,) * (2 * n)).transpose(perm)
    return t.reshape(da, -1, da, op.shape[0] // da), perm


def _from_blocks(t4: np.ndarray, perm: list[int], n: int, d: int) -> np.ndarray:
    dim = d**n
    inv = np.argsort(perm)
    return t4.reshape((d,) * (2 * n)).transpose(inv).reshape(dim, dim)


def exact_first_moment_map(op: np.ndarray, region: Region, d: int) -> np.ndarray:
    """Haar average of conjugation by a unitary on the region.

    Replaces the region factors by the normalized identity times the partial
    trace: an idempotent, trace-preserving, unital projection.  Overlapping
    regions merge, R_A R_B = R_(A|B).
    """
    op = np.asarray(op, dtype=complex)
    n = region.n
    dim = d**n
    if op.shape != (dim, dim):
        raise ValueError(f"operator shape {op.shape} does not match {dim}")
    if dim > MATRIX_DIM_CAP:
        raise CapExceeded(f"dimension {dim} exceeds the dense-operator cap {MATRIX_DIM_CAP}")
    if region.is_empty:
        return op.copy()
    dm = d**region.size
    t4, perm = _to_blocks(op, region.sites(), n, d)
    traced = np.einsum('abac->bc', t4)
    out4 = np.einsum('ac,bd->abcd', np.eye(dm, dtype=complex) / dm, traced)
    return _from_blocks(out4, perm, n, d)


def _copy_swap_matrix(dm: int) -> np.ndarray:
    idx = np.arange(dm * dm)
    out = np.zeros((dm * dm, dm * dm))
    out[(idx % dm) * dm + idx // dm, idx] = 1.0
    return out


def exact_second_moment_projection(op: np.ndarray, region: Region, d: int) -> np.ndarray:
    """Haar average of two-copy conjugation by a unitary on the region.

    Projects the region's two-copy factors onto the span of the identity and
    the region swap, using the orthonormal pair (1 +- T) / sqrt(2 q (q +- 1))
    with q the region dimension; complement factors are untouched.
    """
    op = np.asarray(op, dtype=complex)
    n = region.n
    dim2 = (d**n) ** 2
    if op.shape != (dim2, dim2):
        raise ValueError(f"operator shape {op.shape} does not match the two-copy dimension {dim2}")
    if dim2 > MATRIX_DIM_CAP:
        raise CapExceeded(f"two-copy dimension {dim2} exceeds the cap {MATRIX_DIM_CAP}")
    if region.is_empty:
        return op.copy()
    # copy-1 site s is pseudo-site n+s, copy-2 site s is pseudo-site s
    pseudo = [n + s for s in region.sites()] + list(region.sites())
    dm = d**region.size
    swap = _copy_swap_matrix(dm)
    eye = np.eye(dm * dm)
    t4, perm = _to_blocks(op, pseudo, 2 * n, d)
    out4 = np.zeros_like(t4)
    for sign in (1.0, -1.0):
        f = (eye + sign * swap) / math.sqrt(2.0 * dm * (dm + sign))
        y = np.einsum('ka,abkc->bc', f, t4)
        out4 += np.einsum('ac,bd->abcd', f, y)
    return _from_blocks(out4, perm, 2 * n, d)


def dense_swap(region: Region, d: int) -> np.ndarray:
    """The two-copy swap operator of a region as a dense permutation matrix."""
    n = region.n
    dn = d**n
    if dn * dn > MATRIX_DIM_CAP:
        raise CapExceeded(f"two-copy dimension {dn * dn} exceeds the cap {MATRIX_DIM_CAP}")
    idx = np.arange(dn * dn)
    i, j = idx // dn, idx % dn
    ii, jj = i.copy(), j.copy()
    for s in region.sites():
        p = d**s
        di = (i // p) % d
        dj = (j // p) % d
        ii += (dj - di) * p
        jj += (di - dj) * p
    out = np.zeros((dn * dn, dn * dn))
    out[ii * dn + jj, idx] = 1.0
    return out


def first_moment_mixture_matrix(structure, d: int) -> np.ndarray:
    """Superoperator matrix of the weighted first-moment mixture on vectorized operators."""
    dim = d**structure.n
    if dim * dim > SUPEROP_DIM_CAP:
        raise CapExceeded(f"superoperator dimension {dim * dim} exceeds the cap {SUPEROP_DIM_CAP}")
    weights = structure.weight_vector()
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    basis = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim * dim):
        basis.flat[idx] = 1.0
        acc = np.zeros((dim, dim), dtype=complex)
        for q, region in zip(weights, structure.regions):
            acc += q * exact_first_moment_map(basis, region, d)
        out[:, idx] = acc.reshape(-1)
        basis.flat[idx] = 0.0
    return out
