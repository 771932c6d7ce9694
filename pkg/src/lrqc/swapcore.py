"""Average-purity dynamics of local random circuits in the swap-operator basis.

A circuit ensemble acts on the 2^n-dimensional real span of swap operators,
one per site subset.  A single Haar-averaged gate on a local region either
fixes a swap (when the region does not straddle its boundary) or splits it
into two swaps with positive branch weights, so a state of the dynamics is a
sparse positive combination of regions.  Everything here is exact linear
algebra; the Monte Carlo cross-check lives in ``lrqc.oracle``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import CapExceeded, NumericalAmbiguityError
from .regions import Region, in_boundary

DENSE_MATRIX_MAX_SITES = 14
DEFAULT_PRUNE_TOL = 1e-15
RANK_TOL = 1e-9
_WEIGHT_SUM_TOL = 1e-12


# ---------------------------------------------------------------------------
# Ensemble description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalStructure:
    """The family of local regions gates may act on, with optional weights."""

    n: int
    regions: tuple[Region, ...]
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.regions:
            raise ValueError("at least one local region is required")
        for r in self.regions:
            if r.n != self.n:
                raise ValueError(f"region universe {r.n} does not match n={self.n}")
            if r.is_empty:
                raise ValueError("local regions must be nonempty")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            object.__setattr__(self, "weights", w)
            if len(w) != len(self.regions):
                raise ValueError("weights and regions must have the same length")
            if any(x < 0 for x in w):
                raise ValueError("weights must be nonnegative")
            if abs(math.fsum(w) - 1.0) > _WEIGHT_SUM_TOL:
                raise ValueError(f"weights sum to {math.fsum(w)}, not 1")

    def weight_vector(self) -> tuple[float, ...]:
        if self.weights is not None:
            return self.weights
        m = len(self.regions)
        return (1.0 / m,) * m


@dataclass(frozen=True)
class Uncorrelated:
    """I.i.d. region draws; optionally a different weight vector per step."""

    step_weights: tuple[tuple[float, ...], ...] | None = None


@dataclass(frozen=True)
class Markov:
    """Region sequence drawn from a chain: initial distribution, then row-stochastic transitions.

    ``matrix[i][j]`` is the probability of moving to region j given the last
    applied region was i.
    """

    initial: tuple[float, ...]
    matrix: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class CorrelatedSweep:
    """One step applies every local region once, in the fixed order given.

    ``order[0]``'s map acts on swap vectors first; the simulated circuits
    realize that by applying its gate last within the sweep.
    """

    order: tuple[int, ...]


@dataclass(frozen=True)
class EnsembleSpec:
    """A circuit ensemble: local structure, region-selection policy, local dimension."""

    structure: LocalStructure
    policy: Uncorrelated | Markov | CorrelatedSweep
    d: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"local dimension must be >= 2, got {self.d}")
        m = len(self.structure.regions)
        pol = self.policy
        if isinstance(pol, Uncorrelated):
            if pol.step_weights is not None:
                for w in pol.step_weights:
                    _check_distribution(w, m, "per-step weights")
        elif isinstance(pol, Markov):
            _check_distribution(pol.initial, m, "initial distribution")
            if len(pol.matrix) != m:
                raise ValueError("transition matrix must have one row per region")
            for row in pol.matrix:
                _check_distribution(row, m, "transition row")
        elif isinstance(pol, CorrelatedSweep):
            if sorted(pol.order) != list(range(m)):
                raise ValueError(f"order {pol.order} is not a permutation of 0..{m - 1}")
        else:
            raise TypeError(f"unknown policy {pol!r}")

    def step_weights(self, step_index: int) -> tuple[float, ...]:
        """Mixture weights used at the given step of an uncorrelated process."""
        pol = self.policy
        if not isinstance(pol, Uncorrelated):
            raise ValueError("step weights are only defined for the uncorrelated policy")
        if pol.step_weights is None:
            return self.structure.weight_vector()
        if not 0 <= step_index < len(pol.step_weights):
            raise ValueError(f"step index {step_index} out of range for {len(pol.step_weights)} step weight vectors")
        return pol.step_weights[step_index]


def _check_distribution(w: Sequence[float], m: int, what: str) -> None:
    if len(w) != m:
        raise ValueError(f"{what} has length {len(w)}, expected {m}")
    if any(x < 0 for x in w):
        raise ValueError(f"{what} has negative entries")
    if abs(math.fsum(w) - 1.0) > _WEIGHT_SUM_TOL:
        raise ValueError(f"{what} sums to {math.fsum(w)}, not 1")


def path_structure(n: int) -> LocalStructure:
    """Nearest-neighbour edges of an n-site chain, uniform weights."""
    if n < 2:
        raise ValueError("a path needs at least 2 sites")
    return LocalStructure(n, tuple(Region.of((i, i + 1), n) for i in range(n - 1)))


def complete_structure(n: int) -> LocalStructure:
    """All two-site edges on n sites, uniform weights."""
    if n < 2:
        raise ValueError("a complete graph needs at least 2 sites")
    edges = [Region.of((a, b), n) for a in range(n) for b in range(a + 1, n)]
    return LocalStructure(n, tuple(edges))


# ---------------------------------------------------------------------------
# Swap vectors and the local update rule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SwapVector:
    """A sparse real combination of swap operators, pruned below ``prune_tol``.

    Treated as immutable: every operation returns a fresh vector.
    """

    n: int
    terms: Mapping[Region, float]
    prune_tol: float = DEFAULT_PRUNE_TOL

    def __post_init__(self):
        if self.prune_tol < 0:
            raise ValueError("prune_tol must be >= 0")
        for r, c in self.terms.items():
            if r.n != self.n:
                raise ValueError(f"term universe {r.n} does not match n={self.n}")
            if not math.isfinite(c):
                raise ValueError(f"non-finite coefficient {c} for {r}")
            if abs(c) <= self.prune_tol:
                raise ValueError(f"coefficient {c} for {r} is below the prune tolerance")

    @classmethod
    def single(cls, region: Region, prune_tol: float = DEFAULT_PRUNE_TOL) -> "SwapVector":
        return cls(region.n, {region: 1.0}, prune_tol)


def _pruned(n: int, terms: dict[Region, float], tol: float) -> SwapVector:
    return SwapVector(n, {r: c for r, c in terms.items() if abs(c) > tol}, tol)


@lru_cache(maxsize=None)
def _alpha(a: int, b: int, d: int) -> tuple[float, float]:
    cp = (d**a + d**b) / (d ** (a + b) + 1)
    cm = (d**a - d**b) / (d ** (a + b) - 1)
    return (cp + cm) / 2, (cp - cm) / 2


def alpha_coefficients(target: Region, local: Region, d: int) -> tuple[float, float]:
    """Branch weights of one Haar-averaged local gate acting on the swap of ``target``.

    Returns ``(alpha_plus, alpha_minus)`` multiplying the swaps of
    ``target - local`` and ``target | local`` respectively.  Both are in
    (0, 1) and their sum is below 1, so repeated boundary hits contract the
    total coefficient mass.
    """
    if d < 2:
        raise ValueError("local dimension must be >= 2")
    if not in_boundary(local, target):
        raise ValueError(f"{local} does not straddle the boundary of {target}")
    a = (local - target).size
    b = (local & target).size
    return _alpha(a, b, d)


def apply_local(v: SwapVector, local: Region, d: int) -> SwapVector:
    """One Haar-averaged gate on ``local``, extended linearly over the vector.

    Swaps whose boundary the gate does not straddle are fixed; the others
    split into an erased and a filled branch.
    """
    if local.is_empty:
        raise ValueError("local region must be nonempty")
    if local.n != v.n:
        raise ValueError(f"local region universe {local.n} does not match n={v.n}")
    lm = local.bits
    full = (1 << v.n) - 1
    out: dict[int, float] = {}
    for region, c in v.terms.items():
        m = region.bits
        inter = m & lm
        outside = lm & ~m & full
        if inter == 0 or outside == 0:
            out[m] = out.get(m, 0.0) + c
        else:
            ap, am = _alpha(outside.bit_count(), inter.bit_count(), d)
            lo, hi = m & ~lm, m | lm
            out[lo] = out.get(lo, 0.0) + ap * c
            out[hi] = out.get(hi, 0.0) + am * c
    n = v.n
    return _pruned(n, {Region(m, n): c for m, c in out.items()}, v.prune_tol)


def apply_step(v: SwapVector, spec: EnsembleSpec, step_index: int = 0) -> SwapVector:
    """One uncorrelated step: the weighted mixture of all single-region maps."""
    weights = spec.step_weights(step_index)
    acc: dict[Region, float] = {}
    for region, q in zip(spec.structure.regions, weights):
        if q == 0.0:
            continue
        for r, c in apply_local(v, region, spec.d).terms.items():
            acc[r] = acc.get(r, 0.0) + q * c
    return _pruned(v.n, acc, v.prune_tol)


def apply_sweep(v: SwapVector, spec: EnsembleSpec) -> SwapVector:
    """One correlated step: all local maps composed in the policy's order."""
    pol = spec.policy
    if not isinstance(pol, CorrelatedSweep):
        raise ValueError("apply_sweep requires a correlated-sweep policy")
    for idx in pol.order:
        v = apply_local(v, spec.structure.regions[idx], spec.d)
    return v


def contract_factorized(v: SwapVector) -> float:
    """Pairing with the doubled copy of a pure fully factorized state.

    Every swap operator contracts to exactly 1 against such a state, so the
    pairing is the plain sum of coefficients.
    """
    return math.fsum(v.terms.values())


def complement_involution(v: SwapVector) -> SwapVector:
    """Replace every region by its complement; commutes with every local map."""
    return SwapVector(v.n, {r.complement(): c for r, c in v.terms.items()}, v.prune_tol)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

def markov_purity(initial: Region, spec: EnsembleSpec, k: int) -> list[float]:
    """Average purity P_0..P_k under the Markov region policy.

    Conjugating a swap by a circuit reverses the gate order, so the map of
    the last drawn region acts on the swap first.  The dynamic program keeps
    one swap vector per region index r: the chain-suffix average conditioned
    on r being the region about to act.  Extending the chain by one draw is
    one transition mixture plus one local map per index.  Equivalent to (and
    tested against) the exhaustive sum over region paths.
    """
    pol = spec.policy
    if not isinstance(pol, Markov):
        raise ValueError("markov_purity requires a Markov policy")
    if k < 0:
        raise ValueError("k must be >= 0")
    regions = spec.structure.regions
    out = [1.0]
    if k == 0:
        return out
    base = SwapVector.single(initial)
    tol = base.prune_tol
    n = spec.structure.n

    def front_purity(branches) -> float:
        return math.fsum(q * math.fsum(b.values())
                         for q, b in zip(pol.initial, branches))

    branches = [apply_local(base, region, spec.d).terms for region in regions]
    out.append(front_purity(branches))
    for _ in range(2, k + 1):
        new_branches = []
        for i, region in enumerate(regions):
            mixed: dict[Region, float] = {}
            for j, branch in enumerate(branches):
                w = pol.matrix[i][j]
                if w == 0.0:
                    continue
                for r, c in branch.items():
                    mixed[r] = mixed.get(r, 0.0) + w * c
            new_branches.append(apply_local(_pruned(n, mixed, tol), region, spec.d).terms)
        branches = new_branches
        out.append(front_purity(branches))
    return out


def purity_trajectory(initial: Region, spec: EnsembleSpec, k_max: int) -> list[float]:
    """Average purity P_0..P_k_max of the initial region's swap under the ensemble.

    One index step is a mixture application for uncorrelated policies, a
    chain step for Markov policies, and a full ordered sweep for correlated
    policies.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if isinstance(spec.policy, Markov):
        return markov_purity(initial, spec, k_max)
    v = SwapVector.single(initial)
    out = [1.0]
    for j in range(k_max):
        if isinstance(spec.policy, CorrelatedSweep):
            v = apply_sweep(v, spec)
        else:
            v = apply_step(v, spec, j)
        out.append(contract_factorized(v))
    return out


# ---------------------------------------------------------------------------
# Fixed points and asymptotics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentDecomposition:
    """Connected components of the local-region hypergraph plus uncovered sites."""

    components: tuple[Region, ...]
    residual: Region


def connected_components(structure: LocalStructure) -> ComponentDecomposition:
    """Union-find over regions that share at least one site."""
    masks = [r.bits for r in structure.regions]
    parent = list(range(len(masks)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(masks)):
        for j in range(i + 1, len(masks)):
            if masks[i] & masks[j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, int] = {}
    for i, m in enumerate(masks):
        root = find(i)
        groups[root] = groups.get(root, 0) | m
    n = structure.n
    covered = 0
    for m in groups.values():
        covered |= m
    components = tuple(sorted((Region(m, n) for m in groups.values()),
                              key=lambda r: min(r.sites())))
    return ComponentDecomposition(components, Region(covered ^ ((1 << n) - 1), n))


def purity_infinity(initial: Region, structure: LocalStructure, d: int) -> float:
    """Infinite-time average purity of the initial region's swap.

    A product over hypergraph components: the component of size c holding o
    sites of the initial region contributes (d^(c-o) + d^o) / (d^c + 1).
    Sites outside every local region contribute a factor 1.
    """
    if initial.n != structure.n:
        raise ValueError("initial region universe does not match the structure")
    if d < 2:
        raise ValueError("local dimension must be >= 2")
    result = 1.0
    for comp in connected_components(structure).components:
        c = comp.size
        o = (initial & comp).size
        result *= (float(d) ** (c - o) + float(d) ** o) / (float(d) ** c + 1.0)
    return result


# ---------------------------------------------------------------------------
# Dense matrix form, fixed-space dimension, spectral gap
# ---------------------------------------------------------------------------

def _single_region_matrix(local: Region, n: int, d: int) -> np.ndarray:
    dim = 1 << n
    full = dim - 1
    lm = local.bits
    mat = np.zeros((dim, dim))
    for a in range(dim):
        inter = a & lm
        outside = lm & ~a & full
        if inter == 0 or outside == 0:
            mat[a, a] += 1.0
        else:
            ap, am = _alpha(outside.bit_count(), inter.bit_count(), d)
            mat[a & ~lm, a] += ap
            mat[a | lm, a] += am
    return mat


def build_swap_matrix(spec: EnsembleSpec) -> np.ndarray:
    """Dense 2^n x 2^n matrix of one ensemble step on the swap basis.

    Column A (regions indexed by their masks) holds the coefficients of the
    evolved swap of A.  Uncorrelated policies give the weighted mixture of
    the single-region matrices; a correlated sweep gives their ordered
    product.  Markov policies have no single step matrix.
    """
    n = spec.structure.n
    if n > DENSE_MATRIX_MAX_SITES:
        raise CapExceeded(f"dense swap matrices are capped at {DENSE_MATRIX_MAX_SITES} sites, got {n}")
    pol = spec.policy
    if isinstance(pol, Markov):
        raise ValueError("a Markov ensemble is not a single linear map on the swap basis")
    singles = {r: _single_region_matrix(r, n, spec.d) for r in set(spec.structure.regions)}
    if isinstance(pol, Uncorrelated):
        if pol.step_weights is not None:
            raise ValueError("time-dependent weights do not define a single step matrix")
        weights = spec.structure.weight_vector()
        out = np.zeros((1 << n, 1 << n))
        for q, region in zip(weights, spec.structure.regions):
            out += q * singles[region]
        return out
    out = np.eye(1 << n)
    for idx in pol.order:
        out = singles[spec.structure.regions[idx]] @ out
    return out


def _kernel_of_shift(matrix: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis (columns) of the eigenvalue-1 space of ``matrix``."""
    dim = matrix.shape[0]
    _, s, vh = np.linalg.svd(matrix - np.eye(dim))
    in_band = (s > tol) & (s <= 1e3 * tol)
    if np.any(in_band):
        raise NumericalAmbiguityError(
            f"singular values {s[in_band]} fall inside the ambiguity band around tol={tol}")
    k = int(np.sum(s <= tol))
    return vh[dim - k:].T


def fixed_space_dimension(matrix: np.ndarray, tol: float = RANK_TOL) -> int:
    """Multiplicity of eigenvalue 1, i.e. the kernel dimension of (matrix - I).

    Raises ``NumericalAmbiguityError`` instead of silently resolving counts
    whose singular values sit near the tolerance.
    """
    return _kernel_of_shift(np.asarray(matrix, dtype=float), tol).shape[1]


def _gram_cholesky(n: int, d: int) -> np.ndarray:
    """Cholesky factor of the normalized swap Gram matrix d^(-|A xor B|).

    The Gram matrix factorizes over sites, so its Cholesky factor is the
    n-fold Kronecker power of the one-site factor.
    """
    site = np.linalg.cholesky(np.array([[1.0, 1.0 / d], [1.0 / d, 1.0]]))
    out = np.array([[1.0]])
    for _ in range(n):
        out = np.kron(out, site)
    return out


def spectral_gap_swap(matrix: np.ndarray, d: int, tol: float = RANK_TOL) -> float:
    """One minus the largest singular value outside the fixed space.

    Singular values are taken in the Hilbert-Schmidt geometry of the swaps:
    the raw region basis is not orthonormal, so the matrix is conjugated by
    the Cholesky factor of the swap Gram matrix first, and the fixed space is
    projected out orthogonally in those coordinates.
    """
    mat = np.asarray(matrix, dtype=float)
    dim = mat.shape[0]
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise ValueError(f"matrix dimension {dim} is not a power of two")
    if d < 2:
        raise ValueError("local dimension must be >= 2")
    chol = _gram_cholesky(n, d)
    fixed = _kernel_of_shift(mat, tol)
    primed = chol.T @ mat @ np.linalg.inv(chol).T
    q, _ = np.linalg.qr(chol.T @ fixed)
    proj = np.eye(dim) - q @ q.T
    sigma = np.linalg.svd(proj @ primed @ proj, compute_uv=False)[0]
    return float(min(1.0, max(0.0, 1.0 - sigma)))
