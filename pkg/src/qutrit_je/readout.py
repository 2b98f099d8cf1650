"""Single-shot readout: quantum-jump measurement channel and photon-count traces.

Two complementary models live here.

* The *measurement channel* describes one projective measurement built from
  two cascaded single-shot readouts, under the approximation of at most one
  laser-induced jump per readout. ``table[i, j, k]`` is the probability that
  pre-measurement level ``i`` yields outcome ``j`` and leaves post-measurement
  level ``k``. All three axes use the (+1, 0, -1) ordering. Events where both
  readouts fall below threshold are discarded, so the pre-``|+1>`` block is
  sub-normalized; the missing mass is reported as ``excluded_mass``.
* The *trace simulator* produces bundle-resolved photon counts from a Markov
  jump process with no cap on the number of jumps, and ``optimize_threshold``
  estimates readout fidelity from run lengths the way it is done on real data.
"""
from dataclasses import dataclass, field

import numpy as np

from .core import LEVELS, level_index
from .evolution import DEFAULT_STEPS
from .protocol import spin_labels
from .thermo import free_energy_ratio, ideal_tpm, work_values


@dataclass(frozen=True)
class JumpModel:
    """No-jump probabilities per level and branching of jumps out of ``|0>``."""

    p_plus: float
    p_zero: float
    p_minus: float
    p_zero_up: float
    p_zero_down: float

    def __post_init__(self):
        for name in ("p_plus", "p_zero", "p_minus", "p_zero_up", "p_zero_down"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        total = self.p_zero + self.p_zero_up + self.p_zero_down
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"p_zero + p_zero_up + p_zero_down must be 1, got {total}")


def jump_model_from_fidelity(fidelity):
    """Jump model with ``F = 1 - 1/(2 n)`` and mean platform length ``n = 1/(1 - p)``.

    Solving gives ``p = 2F - 1`` for every level; jumps out of ``|0>`` split evenly.
    """
    if not 0.5 < fidelity <= 1.0:
        raise ValueError(f"fidelity must lie in (0.5, 1], got {fidelity}")
    p = 2.0 * fidelity - 1.0
    q = 0.5 * (1.0 - p)
    return JumpModel(p, 1.0 - 2.0 * q, p, q, q)


# literal probability sets used for the readout-infidelity study
PRESETS = {
    "F90": JumpModel(0.81, 0.81, 0.81, 0.095, 0.095),
    "F98": jump_model_from_fidelity(0.98),
    "ideal": JumpModel(1.0, 1.0, 1.0, 0.0, 0.0),
}


@dataclass(frozen=True)
class MeasurementChannel:
    table: np.ndarray
    excluded_mass: np.ndarray
    jump_model: JumpModel = None


def measurement_channel(jm):
    """Joint (outcome, post-state) probabilities for each pre-state."""
    pp, p0, pm = jm.p_plus, jm.p_zero, jm.p_minus
    up, dn = jm.p_zero_up, jm.p_zero_down
    P, Z, M = (level_index(x) for x in LEVELS)
    t = np.zeros((3, 3, 3))

    # pre |+1>
    t[P, P, P] = pp**2 + up * (1 - pp) / 2
    t[P, Z, P] = up * (1 - pp) / 2
    t[P, P, Z] = pp * (1 - pp) + p0 * (1 - pp) / 2
    t[P, Z, Z] = p0 * (1 - pp) / 2
    t[P, P, M] = t[P, Z, M] = t[P, M, M] = dn * (1 - pp) / 4

    # pre |0>
    t[Z, P, P] = pp * up / 2
    t[Z, Z, P] = p0 * up + pp * up / 2
    t[Z, P, Z] = up * (1 - pp) / 2
    t[Z, Z, Z] = p0**2 + up * (1 - pp) / 2 + dn * (1 - pm) / 2
    t[Z, M, Z] = dn * (1 - pm) / 2
    t[Z, Z, M] = p0 * dn / 2
    t[Z, M, M] = p0 * dn / 2 + pm * dn

    # pre |-1>
    t[M, Z, P] = up * (1 - pm)
    t[M, Z, Z] = pm * (1 - pm) / 2 + p0 * (1 - pm)
    t[M, M, Z] = pm * (1 - pm) / 2
    t[M, Z, M] = dn * (1 - pm) / 2
    t[M, M, M] = pm**2 + dn * (1 - pm) / 2

    excluded = 1.0 - t.sum(axis=(1, 2))
    return MeasurementChannel(t, excluded, jm)


def noisy_joint_distribution(p0, cond, channel, renormalize=True):
    """Observed outcome statistics ``P[x, y]`` of a TPM run through the channel.

    ``x`` is the first measurement outcome and ``y`` the second; ``p0`` and
    ``cond[m, n]`` are in (+1, 0, -1) order. Without ``renormalize`` the result
    sums to the retained (non-excluded) mass; with it, to one.
    """
    t = channel.table
    joint = np.einsum("i,ixj,kj,kyl->xy", np.asarray(p0, float), t, np.asarray(cond, float), t)
    if renormalize:
        joint = joint / joint.sum()
    return joint


def sample_noisy_joint(p0, cond, channel, n_trials, rng):
    """Monte Carlo counterpart of ``noisy_joint_distribution``.

    Returns ``(counts[x, y], n_excluded)`` from ``n_trials`` sampled
    trajectories, where discarded measurements are counted separately.
    """
    t = channel.table
    flat = t.reshape(3, 9)
    # outcome codes 0..8 encode (outcome, post); code 9 is a discarded measurement
    ext = np.concatenate([flat, np.clip(channel.excluded_mass, 0.0, None)[:, None]], axis=1)
    ext = ext / ext.sum(axis=1, keepdims=True)
    cdf_meas = np.cumsum(ext, axis=1)
    cond = np.asarray(cond, float)
    cdf_evol = np.cumsum(cond.T / cond.sum(axis=0)[:, None], axis=1)

    def draw(cdf_rows, u):
        return np.minimum((u[:, None] > cdf_rows).sum(axis=1), cdf_rows.shape[1] - 1)

    pre = draw(np.tile(np.cumsum(p0), (n_trials, 1)), rng.random(n_trials))
    first = draw(cdf_meas[pre], rng.random(n_trials))
    kept = first < 9
    x, mid = np.divmod(np.where(kept, first, 0), 3)
    after = draw(cdf_evol[mid], rng.random(n_trials))
    second = draw(cdf_meas[after], rng.random(n_trials))
    kept &= second < 9
    y = np.where(second < 9, second, 0) // 3
    counts = np.zeros((3, 3), dtype=np.int64)
    np.add.at(counts, (x[kept], y[kept]), 1)
    return counts, int(n_trials - kept.sum())


def _label_permutation(schedule):
    # positions of (+1, 0, -1) in ascending-energy order
    labels = spin_labels(schedule)
    return [labels.index(level) for level in LEVELS]


def deviation(schedule, beta, channel, n_steps=DEFAULT_STEPS, renormalize=True):
    """``<exp(-beta W)>`` from channel-corrupted outcomes minus ``Z(tau)/Z(0)``.

    Work for each trial is assigned from the measured outcomes ``(x, y)``.
    """
    p0, cond, h0, htau = ideal_tpm(schedule, beta, n_steps)
    perm = _label_permutation(schedule)
    p0 = p0[perm]
    cond = cond[np.ix_(perm, perm)]
    w = work_values(h0, htau)[np.ix_(perm, perm)]  # w[y, x]
    joint = noisy_joint_distribution(p0, cond, channel, renormalize)
    lhs = float(np.sum(joint * np.exp(-beta * w.T)))
    return lhs - free_energy_ratio(h0, htau, beta)


def total_variation(joint_a, joint_b):
    return 0.5 * float(np.abs(np.asarray(joint_a) - np.asarray(joint_b)).sum())


# ----------------------------------------------------------------------------
# photon-count traces

LASER_TIME_PER_READOUT = 0.2e-3
REPEATS_PER_READOUT = 900
NUCLEAR_T1 = (3.8e-3, 3.5e-3, 4.2e-3)
# jumps: |+-1> -> |0>, |0> -> |+1> or |-1> with equal odds
DEFAULT_JUMP_TARGETS = np.array([[0.0, 1.0, 0.0], [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]])


@dataclass(frozen=True)
class TraceModel:
    """Photon-count trace parameters; rates in counts/s, durations in seconds.

    ``survival_per_unit`` is the no-jump probability per readout unit for
    (+1, 0, -1); ``jump_targets[i]`` is the destination distribution of a jump
    out of level ``i``.
    """

    rate_bright: float
    rate_dark: float
    unit_duration: float
    repeats_per_bundle: int = 100
    survival_per_unit: tuple = (1.0, 1.0, 1.0)
    jump_targets: np.ndarray = field(default_factory=lambda: DEFAULT_JUMP_TARGETS.copy())

    def __post_init__(self):
        if not self.rate_bright >= self.rate_dark > 0:
            raise ValueError("need rate_bright >= rate_dark > 0")
        if self.unit_duration <= 0 or self.repeats_per_bundle < 1:
            raise ValueError("unit_duration and repeats_per_bundle must be positive")
        q = np.asarray(self.survival_per_unit, float)
        if q.shape != (3,) or np.any(q <= 0) or np.any(q > 1):
            raise ValueError(f"survival probabilities must lie in (0, 1], got {q}")
        jt = np.asarray(self.jump_targets, float)
        if jt.shape != (3, 3) or np.any(jt < 0) or not np.allclose(jt.sum(axis=1), 1.0):
            raise ValueError("jump_targets must be a 3x3 row-stochastic matrix")

    @property
    def bundle_survival(self):
        return np.asarray(self.survival_per_unit, float) ** self.repeats_per_bundle

    def bundle_transition_matrix(self):
        """``M[i, k]``: probability of level ``k`` in the next bundle given ``i`` now."""
        s = self.bundle_survival
        jt = np.asarray(self.jump_targets, float)
        return np.diag(s) + (1.0 - s)[:, None] * jt

    def mean_counts(self, readout_target):
        """Mean photons per bundle for each level (+1, 0, -1) under ``readout_target``."""
        level_index(readout_target)
        rates = np.array([self.rate_dark if lv == readout_target else self.rate_bright for lv in LEVELS])
        return self.repeats_per_bundle * self.unit_duration * rates


def calibrated_trace_model(contrast=1.3, rate_bright=700e3, dark_per_bundle=40.0, t1=NUCLEAR_T1):
    """Trace model calibrated on the experiment's rates and nuclear T1 values.

    ``dark_per_bundle`` is the mean photon number of a dark 100-repeat bundle.
    Each readout unit carries ``0.2 ms / 900`` of laser exposure, which sets
    the per-unit survival ``exp(-t_laser / T1)``.
    """
    unit = dark_per_bundle * contrast / (rate_bright * 100)
    t_laser = LASER_TIME_PER_READOUT / REPEATS_PER_READOUT
    survival = tuple(float(np.exp(-t_laser / x)) for x in t1)
    return TraceModel(rate_bright, rate_bright / contrast, unit, 100, survival)


@dataclass(frozen=True)
class Trace:
    counts: np.ndarray
    states: np.ndarray
    readout_target: int


def simulate_trace(model, n_bundles, readout_target=+1, initial_state=+1, seed=0):
    """Bundle-resolved photon counts and the hidden level path.

    The level path is a Markov chain over bundles: the level survives a bundle
    with probability ``q**repeats`` and otherwise jumps according to
    ``jump_targets``. Counts are Poisson with the bundle's mean for that level.
    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    survival = model.bundle_survival
    jt = np.asarray(model.jump_targets, float)
    idx = np.empty(n_bundles, dtype=np.int64)
    state = level_index(initial_state)
    pos = 0
    while pos < n_bundles:
        stay = survival[state]
        length = n_bundles - pos if stay >= 1.0 else int(rng.geometric(1.0 - stay))
        idx[pos : pos + length] = state
        pos += length
        state = int(rng.choice(3, p=jt[state]))
    means = model.mean_counts(readout_target)[idx]
    counts = rng.poisson(means)
    states = np.asarray(LEVELS)[idx]
    return Trace(counts, states, readout_target)


def trace_seeds(seed, n):
    """Per-trace seed sequences; trace ``k`` gets the same stream regardless of worker count."""
    return np.random.SeedSequence(seed).spawn(n)


def aggregate(counts, b):
    """Sum consecutive groups of ``b`` bundles, dropping an incomplete tail."""
    counts = np.asarray(counts)
    n = (counts.shape[0] // b) * b
    return counts[:n].reshape(-1, b).sum(axis=1)


@dataclass(frozen=True)
class ThresholdResult:
    threshold: int
    fidelity: float
    fidelity_below: float
    fidelity_above: float
    mean_run_below: float
    mean_run_above: float


def _run_statistics(points_list, thresholds):
    """Point and run counts below/above each threshold (below means ``c < T``)."""
    lo, hi = thresholds[0], thresholds[-1]
    span = hi - lo + 2
    n_below = np.zeros(len(thresholds))
    runs_below = np.zeros(len(thresholds))
    runs_above = np.zeros(len(thresholds))
    total = 0
    for pts in points_list:
        pts = np.asarray(pts, dtype=np.int64)
        total += pts.size
        # counts c < T  <=>  T >= c + 1
        hist = np.bincount(np.clip(pts + 1 - lo, 0, span - 1), minlength=span)
        n_below += np.cumsum(hist)[: len(thresholds)]
        prev, cur = pts[:-1], pts[1:]
        # a below-run starts at i when c_i < T <= c_{i-1}
        diff = np.zeros(span + 1)
        starts = cur < prev
        np.add.at(diff, np.clip(cur[starts] + 1 - lo, 0, span), 1)
        np.add.at(diff, np.clip(prev[starts] + 1 - lo, 0, span), -1)
        runs_below += np.cumsum(diff)[: len(thresholds)]
        # an above-run starts at i when c_{i-1} < T <= c_i
        diff = np.zeros(span + 1)
        starts = prev < cur
        np.add.at(diff, np.clip(prev[starts] + 1 - lo, 0, span), 1)
        np.add.at(diff, np.clip(cur[starts] + 1 - lo, 0, span), -1)
        runs_above += np.cumsum(diff)[: len(thresholds)]
        first_below = pts[0] < thresholds
        runs_below += first_below
        runs_above += ~first_below
    return n_below, total - n_below, runs_below, runs_above


def _two_means(points):
    lo, hi = float(points.min()), float(points.max())
    for _ in range(100):
        split = 0.5 * (lo + hi)
        left, right = points[points < split], points[points >= split]
        if left.size == 0 or right.size == 0:
            break
        new = (float(left.mean()), float(right.mean()))
        if new == (lo, hi):
            break
        lo, hi = new
    return lo, hi


def threshold_fidelity(points_list, threshold):
    """Run-length fidelity ``(F1 + F2)/2`` with ``F_i = 1 - 1/(2 n_i)`` at a fixed threshold."""
    n_b, n_a, r_b, r_a = _run_statistics(points_list, np.array([int(threshold)]))
    if r_b[0] == 0 or r_a[0] == 0:
        raise ValueError("threshold leaves one side empty")
    m_b, m_a = n_b[0] / r_b[0], n_a[0] / r_a[0]
    f1, f2 = 1 - 0.5 / m_b, 1 - 0.5 / m_a
    return ThresholdResult(int(threshold), 0.5 * (f1 + f2), f1, f2, m_b, m_a)


def optimize_threshold(traces, b=1):
    """Best integer threshold for readout points made of ``b`` aggregated bundles.

    ``traces`` is a single count array or a list of them. Run lengths are
    counted within each trace. Ties go to the threshold nearest the midpoint
    of the two histogram peaks. Raises ``ValueError`` when no threshold splits
    the data into two platforms.
    """
    if isinstance(traces, np.ndarray) and traces.ndim == 1:
        traces = [traces]
    points_list = [aggregate(getattr(t, "counts", t), b) for t in traces]
    points_list = [p for p in points_list if p.size]
    if not points_list:
        raise ValueError("traces are shorter than one aggregated point")
    allpts = np.concatenate(points_list)
    thresholds = np.arange(int(allpts.min()), int(allpts.max()) + 2)
    n_b, n_a, r_b, r_a = _run_statistics(points_list, thresholds)
    valid = (r_b > 0) & (r_a > 0)
    if not np.any(valid):
        raise ValueError("degenerate traces: only a single platform is present")
    with np.errstate(divide="ignore", invalid="ignore"):
        f = 0.5 * ((1 - 0.5 * r_b / n_b) + (1 - 0.5 * r_a / n_a))
    f = np.where(valid, f, -np.inf)
    best = f.max()
    ties = thresholds[f >= best - 1e-12]
    mid = 0.5 * sum(_two_means(allpts.astype(float)))
    chosen = int(ties[np.argmin(np.abs(ties - mid))])
    return threshold_fidelity(points_list, chosen)


def assignment_fidelity(trace, threshold, b=1):
    """Ground-truth fidelity: mean of P(correct call | dark) and P(correct call | bright).

    Uses the hidden level path. A point counts as dark when every bundle in it
    sits on the readout target.
    """
    pts = aggregate(trace.counts, b)
    on_target = aggregate((trace.states == trace.readout_target).astype(int), b) == b
    below = pts < threshold
    parts = []
    if on_target.any():
        parts.append(below[on_target].mean())
    if (~on_target).any():
        parts.append((~below[~on_target]).mean())
    return float(np.mean(parts))


def histogram(points):
    """``(photon_count, frequency)`` arrays over the observed count range."""
    points = np.asarray(points, dtype=np.int64)
    lo = int(points.min())
    freq = np.bincount(points - lo)
    return np.arange(lo, lo + freq.size), freq


def calibrate(traces, bundle_sizes=range(1, 16)):
    """``optimize_threshold`` for each bundle size; returns ``{b: ThresholdResult}``."""
    return {int(b): optimize_threshold(traces, b) for b in bundle_sizes}
