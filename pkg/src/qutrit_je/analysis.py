"""Monte Carlo bootstrap of the Jarzynski test from measured joint probabilities.

Joint probabilities are indexed ``[m, n]`` (final ``m``, initial ``n``) in
ascending-energy order, matching the conditional matrices of ``thermo``.
Each Monte Carlo run resamples the joint table, fits an inverse temperature
to the implied initial populations, and evaluates both sides of the identity
at that temperature.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .core import eigh, log_partition
from .thermo import ideal_tpm, work_values

GRID_POINTS = 501
GRID_MAX = 5.0  # in units of beta * energy scale
GOLDEN_TOL = 1e-6
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class JointCounts:
    """Outcome counts ``counts[m, n]`` of a two-point-measurement experiment."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (3, 3) or np.any(c < 0) or not np.all(np.equal(np.mod(c, 1), 0)):
            raise ValueError("counts must be a 3x3 array of non-negative integers")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def probabilities(self):
        if self.total == 0:
            raise ValueError("no counts recorded")
        return self.counts / self.total


def binomial_sigma(counts):
    """``sqrt(P (1 - P) / N)`` for each joint entry, with ``N`` the global total."""
    if not isinstance(counts, JointCounts):
        counts = JointCounts(counts)
    n = counts.total
    if n == 0:
        raise ValueError("binomial errors need a non-zero total")
    p = counts.probabilities
    return np.sqrt(p * (1.0 - p) / n)


@dataclass(frozen=True)
class BetaFit:
    beta: float
    anti_thermal: bool = False


def _energy_scale(energies):
    span = 0.5 * (energies.max() - energies.min())
    if span <= 0:
        raise ValueError("H0 must have a non-degenerate spectrum")
    return span


def _normalize_populations(pops):
    pops = np.clip(np.asarray(pops, dtype=float), 0.0, None)
    total = pops.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise ValueError("populations must have positive total")
    return pops / total


def _bhattacharyya(x, energies, scale, sqrt_p):
    """Fidelity of Gibbs states at ``beta = x/scale`` against ``p``; broadcasts over ``x``."""
    e = (energies - energies.min()) / scale
    logw = -x[..., None] * e
    logw = logw - np.log(np.exp(logw).sum(axis=-1, keepdims=True))
    return np.sum(np.exp(0.5 * logw) * sqrt_p, axis=-1) ** 2


def fit_beta_batch(populations, h0):
    """Vectorised ``fit_beta`` over a ``(K, 3)`` stack of populations.

    Returns ``(beta, anti_thermal_flags)``.
    """
    energies = eigh(h0).values
    scale = _energy_scale(energies)
    pops = _normalize_populations(np.atleast_2d(populations))
    sqrt_p = np.sqrt(pops)
    grid = np.linspace(0.0, GRID_MAX, GRID_POINTS)
    fid = _bhattacharyya(grid[None, :], energies, scale, sqrt_p[:, None, :])
    best = np.argmax(fid, axis=1)
    step = grid[1] - grid[0]
    lo = np.clip(grid[best] - step, 0.0, GRID_MAX)
    hi = np.clip(grid[best] + step, 0.0, GRID_MAX)

    def f(x):
        return _bhattacharyya(x, energies, scale, sqrt_p)

    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    while np.max(hi - lo) > GOLDEN_TOL:
        left = fc > fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        c_new = hi - _INVPHI * (hi - lo)
        d_new = lo + _INVPHI * (hi - lo)
        c, d = c_new, d_new
        fc, fd = f(c), f(d)
    x = 0.5 * (lo + hi)
    # the grid start is a valid optimum; keep exact zero when the edge wins
    x = np.where(f(np.zeros_like(x)) >= f(x), 0.0, x)
    # strictly increasing with energy cannot be thermal at beta >= 0
    order = np.argsort(energies, kind="stable")
    p_sorted = pops[:, order]
    anti = np.all(np.diff(p_sorted, axis=1) > 0, axis=1)
    x = np.where(anti, 0.0, x)
    return x / scale, anti


def fit_beta(populations, h0):
    """Inverse temperature of the diagonal Gibbs state closest to ``populations``.

    ``populations`` follow the ascending-energy order of ``h0``. Negative
    entries are clamped to zero and the rest renormalized. The Bhattacharyya
    fidelity ``(sum_i sqrt(g_i p_i))**2`` equals the Uhlmann fidelity for
    commuting diagonal states; it is maximized over ``beta * s`` in
    ``[0, 5]`` (``s`` half the spectral width of ``h0``) on a 501-point grid,
    then refined by golden section to ``1e-6``. Populations that increase
    strictly with energy return ``beta = 0`` with ``anti_thermal=True``.
    """
    pops = np.asarray(populations, dtype=float)
    if pops.shape != (3,):
        raise ValueError(f"need 3 populations, got shape {pops.shape}")
    beta, anti = fit_beta_batch(pops[None], h0)
    return BetaFit(float(beta[0]), bool(anti[0]))


@dataclass(frozen=True)
class McSummary:
    beta_exp_mean: float
    beta_exp_std: float
    lhs_mean: float
    lhs_std: float
    rhs_mean: float
    rhs_std: float
    K: int
    seed: int
    beta_abs_lambda_mean: float = float("nan")
    beta_abs_lambda_std: float = float("nan")

    def to_dict(self):
        return asdict(self)


def _draw_runs(probs, sigmas, seeds, negative):
    out = np.empty((len(seeds), 3, 3))
    for k, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        p = rng.normal(probs, sigmas)
        if negative == "resample":
            for _ in range(1000):
                bad = p < 0
                if not bad.any():
                    break
                p[bad] = rng.normal(probs[bad], sigmas[bad])
        out[k] = np.clip(p, 0.0, None)
    return out


def _evaluate(p, h0, htau):
    pops = p.sum(axis=1)  # column sums over m give initial populations
    beta, _ = fit_beta_batch(np.where(pops.sum(axis=1, keepdims=True) > 0, pops, 1.0), h0)
    w = work_values(h0, htau)
    lhs = np.sum(p * np.exp(-beta[:, None, None] * w[None]), axis=(1, 2))
    e0, et = eigh(h0).values, eigh(htau).values
    rhs = np.array([np.exp(log_partition(et, b) - log_partition(e0, b)) for b in beta])
    return beta, lhs, rhs


def mc_runs(probabilities, sigmas, h0, htau, K=10_000, seed=0, negative="clip", workers=1):
    """Per-run ``(beta, lhs, rhs)`` arrays of the bootstrap.

    Run ``k`` draws from its own stream ``SeedSequence(seed).spawn(K)[k]``, so
    results do not depend on ``workers``.
    """
    probs = np.asarray(probabilities, dtype=float)
    sig = np.asarray(sigmas, dtype=float)
    if probs.shape != (3, 3) or sig.shape != (3, 3):
        raise ValueError("probabilities and sigmas must be 3x3")
    if np.any(probs < 0) or np.any(sig < 0):
        raise ValueError("probabilities and sigmas must be non-negative")
    if K < 100:
        raise ValueError(f"K must be >= 100, got {K}")
    if negative not in ("clip", "resample"):
        raise ValueError(f"negative must be 'clip' or 'resample', got {negative!r}")
    seeds = np.random.SeedSequence(seed).spawn(K)
    chunks = np.array_split(np.arange(K), max(1, int(workers)))
    draw = lambda idx: _draw_runs(probs, sig, [seeds[i] for i in idx], negative)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(draw, chunks))
    else:
        parts = [draw(idx) for idx in chunks]
    p = np.concatenate(parts)
    return _evaluate(p, h0, htau)


def mc_pipeline(probabilities, sigmas, h0, htau, K=10_000, seed=0, negative="clip", workers=1):
    """Bootstrap summary of ``beta_exp``, ``<exp(-beta W)>`` and ``exp(-beta dF)``."""
    beta, lhs, rhs = mc_runs(probabilities, sigmas, h0, htau, K, seed, negative, workers)
    scale = _energy_scale(eigh(h0).values)
    return McSummary(
        float(beta.mean()),
        _spread(beta),
        float(lhs.mean()),
        _spread(lhs),
        float(rhs.mean()),
        _spread(rhs),
        int(K),
        int(seed),
        float(beta.mean() * scale),
        float(_spread(beta) * scale),
    )


def _spread(x):
    # shifting by the first run keeps identical runs at exactly zero spread
    return float(np.std(x - x[0]))


def average_joints(joints):
    """Entrywise mean of joint-probability tables taken at different switch durations."""
    joints = np.asarray(joints, dtype=float)
    if joints.ndim != 3 or joints.shape[1:] != (3, 3):
        raise ValueError("expected a stack of 3x3 tables")
    return joints.mean(axis=0)


def synthetic_joint(schedule, beta, shots, n_steps=20_000):
    """Ideal joint table and its binomial errors for ``shots`` trials."""
    p0, cond, h0, htau = ideal_tpm(schedule, beta, n_steps)
    joint = cond * p0[None, :]
    sigmas = np.sqrt(joint * (1.0 - joint) / shots)
    return joint, sigmas, h0, htau
