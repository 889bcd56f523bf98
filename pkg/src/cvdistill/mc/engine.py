"""Shot-by-shot Monte Carlo of the tap-and-threshold distillation pipeline.

Each shot samples a channel level, draws a phase-space point from that
component's Gaussian distribution, applies the heralding test to the tap X
quadrature, and accumulates streaming statistics and histograms. Sampling
the joint Gaussian is exact for every statistic reported here because each
measured set involves at most one quadrature per mode.

Shots are processed in fixed-size chunks; the chunk loop delegates to a
compiled kernel when available and to a numpy fallback otherwise. Results
are reproducible: a given (mixture, config) pair yields identical output
on every run, and the shot space is partitioned deterministically across
workers so a fixed (seed, n_workers) pair is reproducible as well.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..channel import FluctuatingChannel, MixtureState
from ..distill import DegenerateSelectionError
from ..gaussian import GaussianState, gaussian_log_negativity
from .accumulators import CovarianceAccumulator
from ._kernel_py import N_FEATURES, PAIRS

try:  # pragma: no cover - exercised implicitly via kernel_backend()
    from . import _shotkernel as _default_kernel
except ImportError:  # pragma: no cover
    from . import _kernel_py as _default_kernel

from . import _kernel_py

__all__ = [
    "SERIES",
    "PAIRS",
    "McConfig",
    "McResult",
    "kernel_backend",
    "sample_level",
    "sample_phase_point",
    "histogram",
    "run_mc",
    "ln_with_se",
]

# Histogrammed series: tap X, transmitted-beam quadratures, joint quadratures.
SERIES = ("X_tap", "X_B", "P_B", "X_A+X_B", "P_A-P_B")

# Shots per kernel call. Fixed (not configurable): changing it would change
# the order random numbers are consumed in and therefore the sampled shots.
CHUNK_SHOTS = 1 << 16


def kernel_backend() -> str:
    """Name of the kernel selected at import: 'compiled' or 'python'."""
    return _default_kernel.BACKEND


def _resolve_kernel(name):
    if name is None:
        return _default_kernel
    if name == "python":
        return _kernel_py
    if name == "compiled":
        from . import _shotkernel

        return _shotkernel
    raise ValueError(f"unknown kernel {name!r}; use 'python' or 'compiled'")


@dataclass
class McConfig:
    """Monte Carlo run settings; the default shot count is desk scale."""

    n_shots: int = 10_000_000
    seed: int = 12345
    threshold_x: float = 0.0
    histogram_bins: int = 201
    histogram_range: float = 25.0
    n_workers: int = 1

    def __post_init__(self) -> None:
        if self.n_shots < 1:
            raise ValueError("n_shots must be >= 1")
        if self.histogram_bins < 2:
            raise ValueError("histogram_bins must be >= 2")
        if self.histogram_range <= 0:
            raise ValueError("histogram_range must be positive")
        if self.n_workers < 1:
            raise ValueError("n_workers must be >= 1")


@dataclass(eq=False)
class McResult:
    """Post-selected statistics of one Monte Carlo run.

    ``histograms`` maps each series name to {"pre": (edges, counts),
    "post": (edges, counts)}; pre-selection counts sum to ``total_count``,
    post-selection counts to ``kept_count``. ``cov_sampling`` is the
    empirical (distribution-free) sampling covariance of the ten
    independent covariance-entry estimates, in the ordering of ``PAIRS``.
    The seed, worker count and kernel backend are recorded because worker
    count affects the random stream layout.
    """

    kept_count: int
    total_count: int
    success_probability_hat: float
    success_probability_se: float
    pooled_mean_hat: np.ndarray
    pooled_cov_hat: np.ndarray
    pooled_cov_se: np.ndarray
    cov_sampling: np.ndarray
    histograms: dict
    per_level_kept: np.ndarray
    seed: int
    n_workers: int
    kernel: str


def sample_level(channel: FluctuatingChannel, rng: np.random.Generator, size=None):
    """Draw channel-level indices by inverse CDF on the cumulative table."""
    cum = np.cumsum(channel.probabilities)
    cum[-1] = 1.0
    draws = rng.random() if size is None else rng.random(size)
    return np.searchsorted(cum, draws, side="right")


def sample_phase_point(state: GaussianState, rng: np.random.Generator, size=None):
    """Draw phase-space points from the state's Gaussian distribution.

    Uses the cached lower-triangular factor of the covariance; raises if
    the covariance is not positive definite.
    """
    chol = state.cholesky_factor()
    shape = (2 * state.n_modes,) if size is None else (size, 2 * state.n_modes)
    z = rng.standard_normal(shape)
    return z @ chol.T + state.mean


def histogram(values, bins: int, hist_range: float):
    """Uniform histogram over [-hist_range, +hist_range] with clamped end bins.

    Out-of-range values are counted in the first or last bin so the counts
    always sum to the number of input values. Returns (edges, counts).
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    values = np.asarray(values, dtype=float).reshape(-1)
    edges = np.linspace(-hist_range, hist_range, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    if values.size:
        inv_width = bins / (2.0 * hist_range)
        idx = ((values + hist_range) * inv_width).astype(np.int64)
        np.clip(idx, 0, bins - 1, out=idx)
        counts += np.bincount(idx, minlength=bins)
    return edges, counts


def _prepare_components(mixture3: MixtureState):
    cum = np.cumsum(mixture3.weights)
    cum[-1] = 1.0
    means = np.array([s.mean for s in mixture3.states])
    chols = np.array([s.cholesky_factor() for s in mixture3.states])
    return cum, means, chols


def _run_shard(cum, means, chols, n_shots, threshold, n_bins, hist_range, seed_seq, kernel_name):
    kernel = _resolve_kernel(kernel_name)
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    n_levels = cum.shape[0]
    level_ids = np.arange(n_levels)
    hist_pre = np.zeros((5, n_bins), dtype=np.int64)
    hist_post = np.zeros((5, n_bins), dtype=np.int64)
    per_level_kept = np.zeros(n_levels, dtype=np.int64)
    acc = CovarianceAccumulator(N_FEATURES)
    done = 0
    while done < n_shots:
        m = int(min(CHUNK_SHOTS, n_shots - done))
        draws = rng.random(m)
        counts = np.bincount(
            np.searchsorted(cum, draws, side="right"), minlength=n_levels
        )
        z = rng.standard_normal((m, 6))
        x = np.empty((m, 6))
        pos = 0
        for i in range(n_levels):
            c = int(counts[i])
            if c:
                np.matmul(z[pos : pos + c], chols[i].T, out=x[pos : pos + c])
                x[pos : pos + c] += means[i]
                pos += c
        levels = np.repeat(level_ids, counts)
        n_kept, mean, m2 = kernel.accumulate_chunk(
            x, levels, threshold, hist_range, n_bins, hist_pre, hist_post, per_level_kept
        )
        acc.merge_moments(n_kept, mean, m2)
        done += m
    return acc.count, acc.mean, acc.m2, hist_pre, hist_post, per_level_kept


def _shard_worker(args):
    return _run_shard(*args)


def run_mc(mixture3: MixtureState, config: McConfig, kernel=None) -> McResult:
    """Run the Monte Carlo pipeline on a three-mode (A, B, Tap) mixture.

    ``kernel`` optionally forces the 'python' or 'compiled' backend
    (used by the kernel benchmark and parity tests).

    Raises
    ------
    DegenerateSelectionError
        If fewer than two shots pass the threshold; the exception carries
        the pre-selection statistics in its ``pre_stats`` attribute.
    """
    if mixture3.n_modes != 3:
        raise ValueError(f"expected a three-mode (A, B, Tap) mixture, got {mixture3.n_modes}")
    kernel_mod = _resolve_kernel(kernel)
    cum, means, chols = _prepare_components(mixture3)
    n_workers = config.n_workers
    children = np.random.SeedSequence(config.seed).spawn(n_workers)
    base, rem = divmod(config.n_shots, n_workers)
    shard_sizes = [base + (1 if w < rem else 0) for w in range(n_workers)]
    jobs = [
        (cum, means, chols, shard_sizes[w], config.threshold_x,
         config.histogram_bins, config.histogram_range, children[w], kernel_mod.BACKEND)
        for w in range(n_workers)
        if shard_sizes[w] > 0
    ]
    if n_workers == 1:
        outs = [_shard_worker(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outs = list(pool.map(_shard_worker, jobs))

    acc = CovarianceAccumulator(N_FEATURES)
    hist_pre = np.zeros((5, config.histogram_bins), dtype=np.int64)
    hist_post = np.zeros((5, config.histogram_bins), dtype=np.int64)
    per_level_kept = np.zeros(len(mixture3), dtype=np.int64)
    for count, mean, m2, pre, post, per_level in outs:
        acc.merge_moments(count, mean, m2)
        hist_pre += pre
        hist_post += post
        per_level_kept += per_level

    edges = np.linspace(-config.histogram_range, config.histogram_range, config.histogram_bins + 1)
    histograms = {
        name: {"pre": (edges, hist_pre[k].copy()), "post": (edges, hist_post[k].copy())}
        for k, name in enumerate(SERIES)
    }
    kept = acc.count
    total = config.n_shots
    if kept < 2:
        exc = DegenerateSelectionError(
            f"only {kept} of {total} shots passed threshold {config.threshold_x}"
        )
        exc.pre_stats = {
            "kept_count": kept,
            "total_count": total,
            "histograms": {name: histograms[name]["pre"] for name in SERIES},
            "per_level_kept": per_level_kept,
        }
        raise exc

    p_hat = kept / total
    p_se = float(np.sqrt(p_hat * (1.0 - p_hat) / total))
    feat_cov = acc.covariance(ddof=1)
    cov = feat_cov[:4, :4].copy()
    cov_sampling = _cov_entry_sampling(acc.mean, feat_cov, kept)
    cov_se = np.zeros((4, 4))
    for p, (j, k) in enumerate(PAIRS):
        se = np.sqrt(max(cov_sampling[p, p], 0.0))
        cov_se[j, k] = cov_se[k, j] = se
    return McResult(
        kept_count=kept,
        total_count=total,
        success_probability_hat=p_hat,
        success_probability_se=p_se,
        pooled_mean_hat=acc.mean[:4].copy(),
        pooled_cov_hat=cov,
        pooled_cov_se=cov_se,
        cov_sampling=cov_sampling,
        histograms=histograms,
        per_level_kept=per_level_kept,
        seed=config.seed,
        n_workers=n_workers,
        kernel=kernel_mod.BACKEND,
    )


def _cov_entry_sampling(feat_mean: np.ndarray, feat_cov: np.ndarray, n: int) -> np.ndarray:
    """Sampling covariance of the ten covariance-entry estimates.

    The kernels accumulate the quadratures and their pairwise products as
    one feature vector, so the CLT covariance of the feature means is
    feat_cov/n; each covariance entry c_jk = mean(x_j x_k) - mean_j mean_k
    is a smooth function of those means, and the delta-method Jacobian
    below maps one onto the other with no distributional assumption.
    """
    jac = np.zeros((len(PAIRS), N_FEATURES))
    for p, (j, k) in enumerate(PAIRS):
        jac[p, 4 + p] = 1.0
        jac[p, j] -= feat_mean[k]
        jac[p, k] -= feat_mean[j]
    return jac @ (feat_cov / n) @ jac.T


def _ln_gradient(cov: np.ndarray) -> np.ndarray:
    """Numerical gradient of the log-negativity over the ten independent entries."""
    grad = np.zeros(len(PAIRS))
    for p, (j, k) in enumerate(PAIRS):
        h = 1e-6 * max(1.0, abs(cov[j, k]))
        basis = np.zeros((4, 4))
        basis[j, k] = basis[k, j] = 1.0
        grad[p] = (
            gaussian_log_negativity(cov + h * basis) - gaussian_log_negativity(cov - h * basis)
        ) / (2.0 * h)
    return grad


def ln_with_se(result: McResult):
    """Log-negativity of the Monte Carlo covariance and its standard error.

    The error propagates the run's empirical covariance-entry sampling
    covariance through a numerical gradient of the log-negativity.
    """
    ln = gaussian_log_negativity(result.pooled_cov_hat)
    grad = _ln_gradient(result.pooled_cov_hat)
    var = float(grad @ result.cov_sampling @ grad)
    return ln, float(np.sqrt(max(var, 0.0)))
