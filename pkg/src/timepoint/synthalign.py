"""Procedural signals with keypoint labels, and warped training pairs.

Four waveform families are mixed (sine compositions, block waves,
sawtooth/triangle waves and Gaussian blobs). Every family reports its own
salient indices on its clean output; the union of those becomes the label
mask. Noise never enters the labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .cpab import CpaPrior, CpabTransform, Tessellation, sample_theta, warp_keypoints, warp_signal

WAVEFORMS = ("sine", "block", "sawtooth", "rbf")


@dataclass(frozen=True)
class SynthConfig:
    length: int = 512
    waveform_probs: tuple = (0.6, 0.15, 0.05, 0.2)
    noise_sigma: float = 0.1
    trend_enabled: bool = True
    flip_enabled: bool = True
    rng_seed: int | None = 0
    # how many generators are summed, and with which probability each count
    n_generators: tuple = (1, 2)
    n_generators_probs: tuple = (0.7, 0.3)
    sine_components: tuple = (1, 3)
    sine_freq: tuple = (1.0, 8.0)
    sine_amp: tuple = (0.3, 1.0)
    sine_phase: tuple = (0.0, 2 * np.pi)
    block_count: tuple = (2, 8)
    sawtooth_freq: tuple = (1.0, 6.0)
    rbf_count: tuple = (1, 5)
    rbf_width: tuple = (0.02, 0.15)
    subinterval_prob: float = 0.2
    trend_prob: float = 0.5
    flip_prob: float = 0.5

    def __post_init__(self):
        probs = np.asarray(self.waveform_probs, dtype=float)
        if probs.shape != (4,) or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("waveform_probs must be 4 nonnegative values summing to 1")
        if self.length < 32:
            raise ValueError("length must be >= 32")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")

    def with_seed(self, seed) -> "SynthConfig":
        return replace(self, rng_seed=seed)


@dataclass
class AnnotatedSignal:
    signal: np.ndarray
    kp_mask: np.ndarray
    clean: np.ndarray | None = None

    @property
    def keypoints(self) -> np.ndarray:
        return np.flatnonzero(self.kp_mask)


@dataclass
class TrainingPair:
    original: AnnotatedSignal
    warped: AnnotatedSignal
    theta: np.ndarray
    correspondences: list = field(default_factory=list)


def _rng(config_or_rng, rng=None) -> np.random.Generator:
    if rng is not None:
        return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return np.random.default_rng(config_or_rng)


def _uniform_int(rng, bounds) -> int:
    lo, hi = bounds
    return int(rng.integers(lo, hi + 1))


def _extrema(x: np.ndarray) -> np.ndarray:
    """Indices where the discrete derivative changes sign."""
    d = np.diff(x)
    s = np.sign(d)
    # carry the last nonzero slope across flat steps so plateaus don't hide a turn
    nz = np.flatnonzero(s)
    if nz.size < 2:
        return np.empty(0, dtype=np.int64)
    flips = np.flatnonzero(s[nz[1:]] != s[nz[:-1]])
    out = []
    for k in flips:
        left, right = nz[k], nz[k + 1]
        if right == left + 1:
            out.append(right)
        else:
            out.append((left + 1 + right) // 2)
    return np.asarray(out, dtype=np.int64)


def _support(rng, config, n):
    """Full domain, or with ``subinterval_prob`` a random strict sub-interval."""
    if rng.random() >= config.subinterval_prob:
        return 0, n, []
    width = int(rng.integers(n // 4, (3 * n) // 4 + 1))
    start = int(rng.integers(1, n - width))
    return start, start + width, [start, start + width - 1]


def _sine(rng, config, t, n):
    start, stop, marks = _support(rng, config, n)
    x = np.zeros(n)
    for _ in range(_uniform_int(rng, config.sine_components)):
        f = rng.uniform(*config.sine_freq)
        amp = rng.uniform(*config.sine_amp)
        phase = rng.uniform(*config.sine_phase)
        x += amp * np.sin(2 * np.pi * f * t + phase)
    kps = [k for k in _extrema(x[start:stop]) + start]
    x[:start] = 0.0
    x[stop:] = 0.0
    return x, kps + marks


def _block(rng, config, n):
    n_blocks = _uniform_int(rng, config.block_count)
    min_size = max(4, n // 32)
    # cut points with a minimum block size
    slack = n - n_blocks * min_size
    cuts = np.sort(rng.integers(0, max(slack, 0) + 1, size=n_blocks - 1))
    edges = cuts + min_size * np.arange(1, n_blocks)
    levels = [rng.uniform(-1.0, 1.0)]
    for _ in range(n_blocks - 1):
        step = rng.uniform(0.3, 1.2) * rng.choice([-1.0, 1.0])
        nxt = levels[-1] + step
        if abs(nxt) > 1.2:
            nxt = levels[-1] - step
        levels.append(nxt)
    x = np.empty(n)
    bounds = np.concatenate([[0], edges, [n]])
    for lvl, lo, hi in zip(levels, bounds[:-1], bounds[1:]):
        x[lo:hi] = lvl
    return x, np.flatnonzero(np.diff(x) != 0) + 1


def _sawtooth(rng, config, t, n):
    start, stop, marks = _support(rng, config, n)
    f = rng.uniform(*config.sawtooth_freq)
    amp = rng.uniform(*config.sine_amp)
    phase = rng.uniform()
    frac = np.mod(f * t + phase, 1.0)
    if rng.random() < 0.5:
        # triangle: symmetric sawtooth, turning points are the keypoints
        x = amp * (1.0 - 4.0 * np.abs(frac - 0.5))
        kps = _extrema(x[start:stop]) + start
    else:
        x = amp * (2.0 * frac - 1.0) * rng.choice([-1.0, 1.0])
        kps = np.flatnonzero(np.abs(np.diff(x[start:stop])) > amp) + 1 + start
    x[:start] = 0.0
    x[stop:] = 0.0
    return x, list(kps) + marks


def _rbf(rng, config, t, n):
    x = np.zeros(n)
    kps = []
    for _ in range(_uniform_int(rng, config.rbf_count)):
        center = rng.uniform(0.05, 0.95)
        width = rng.uniform(*config.rbf_width)
        amp = rng.uniform(*config.sine_amp) * rng.choice([-1.0, 1.0])
        x += amp * np.exp(-0.5 * ((t - center) / width) ** 2)
        kps.append(int(round(center * (n - 1))))
    return x, kps


def _compose(rng: np.random.Generator, config: SynthConfig):
    n = config.length
    t = np.linspace(0.0, 1.0, n)
    n_gen = int(rng.choice(config.n_generators, p=config.n_generators_probs))
    x = np.zeros(n)
    kps: list[int] = []
    for _ in range(n_gen):
        kind = WAVEFORMS[int(rng.choice(4, p=config.waveform_probs))]
        if kind == "sine":
            part, k = _sine(rng, config, t, n)
        elif kind == "block":
            part, k = _block(rng, config, n)
        elif kind == "sawtooth":
            part, k = _sawtooth(rng, config, t, n)
        else:
            part, k = _rbf(rng, config, t, n)
        x += part
        kps.extend(int(i) for i in k)

    if config.trend_enabled and rng.random() < config.trend_prob:
        x += rng.uniform(-1.0, 1.0) * t + rng.uniform(-0.5, 0.5)
    if config.flip_enabled and rng.random() < config.flip_prob:
        if rng.random() < 0.5:
            x = -x
        else:
            width = int(rng.integers(n // 8, n // 2 + 1))
            start = int(rng.integers(1, n - width))
            x[start:start + width] *= -1.0
            kps.extend([start, start + width])

    mask = np.zeros(n, dtype=np.uint8)
    kps_arr = np.asarray(kps, dtype=np.int64)
    kps_arr = kps_arr[(kps_arr >= 0) & (kps_arr < n)]
    mask[kps_arr] = 1
    return x, mask


def generate_sample(config: SynthConfig = SynthConfig(), rng=None, max_tries: int = 100) -> AnnotatedSignal:
    """One annotated signal; deterministic for a fixed seed (or generator state)."""
    gen = _rng(config.rng_seed, rng)
    n = config.length
    for _ in range(max_tries):
        clean, mask = _compose(gen, config)
        count = int(mask.sum())
        if 2 <= count <= n // 4:
            break
    else:
        raise RuntimeError("could not draw a signal with a valid keypoint count")
    noisy = clean + config.noise_sigma * gen.standard_normal(n) if config.noise_sigma > 0 else clean.copy()
    return AnnotatedSignal(signal=noisy, kp_mask=mask, clean=clean)


def annotate_keypoints(x) -> np.ndarray:
    """Heuristic labels for unlabelled data: strict local extrema plus unique global extrema."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 3:
        raise ValueError("need at least 3 samples")
    mask = np.zeros(x.size, dtype=np.uint8)
    d = np.diff(x)
    peaks = np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0) + 1
    mask[peaks] = 1
    for idx, val in ((np.argmax(x), x.max()), (np.argmin(x), x.min())):
        if np.count_nonzero(x == val) == 1:
            mask[idx] = 1
    return mask


def _pairs_to_correspondences(src_mask, dst_mask, pairs):
    src_rank = {p: i for i, p in enumerate(np.flatnonzero(src_mask).tolist())}
    dst_rank = {q: j for j, q in enumerate(np.flatnonzero(dst_mask).tolist())}
    return [(src_rank[p], dst_rank[q]) for p, q in pairs]


def make_training_pair(config: SynthConfig, prior: CpaPrior, rng=None, theta=None) -> TrainingPair:
    """Signal, its CPAB-warped copy and the keypoint correspondences between them.

    Noise is drawn independently for each side, after warping.
    """
    gen = _rng(config.rng_seed, rng)
    clean_cfg = replace(config, noise_sigma=0.0)
    base = generate_sample(clean_cfg, rng=gen)
    if theta is None:
        theta = sample_theta(prior, gen)
    theta = np.asarray(theta, dtype=np.float64)
    warp = CpabTransform(theta, Tessellation(prior.n_cells))
    clean_w = warp_signal(base.clean, warp)
    mask_w, pairs = warp_keypoints(base.kp_mask, warp)

    n = config.length
    sigma = config.noise_sigma
    noisy = base.clean + sigma * gen.standard_normal(n) if sigma > 0 else base.clean.copy()
    noisy_w = clean_w + sigma * gen.standard_normal(n) if sigma > 0 else clean_w.copy()
    original = AnnotatedSignal(noisy, base.kp_mask, base.clean)
    warped = AnnotatedSignal(noisy_w, mask_w, clean_w)
    return TrainingPair(original, warped, theta, _pairs_to_correspondences(base.kp_mask, mask_w, pairs))


def make_finetune_pair(x, prior: CpaPrior, rng=None, thetas=None) -> TrainingPair:
    """Two independently warped views of a real signal, labelled heuristically."""
    x = np.asarray(x, dtype=np.float64)
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    mask = annotate_keypoints(x)
    if thetas is None:
        thetas = (sample_theta(prior, gen), sample_theta(prior, gen))
    tess = Tessellation(prior.n_cells)
    t1, t2 = (CpabTransform(np.asarray(th, dtype=np.float64), tess) for th in thetas)
    x1, x2 = warp_signal(x, t1), warp_signal(x, t2)
    m1, pairs1 = warp_keypoints(mask, t1)
    m2, pairs2 = warp_keypoints(mask, t2)
    to2 = dict(pairs2)
    rank1 = {q: i for i, q in enumerate(np.flatnonzero(m1).tolist())}
    rank2 = {q: j for j, q in enumerate(np.flatnonzero(m2).tolist())}
    corr = [(rank1[q1], rank2[to2[p]]) for p, q1 in pairs1 if p in to2]
    return TrainingPair(
        AnnotatedSignal(x1, m1, x1),
        AnnotatedSignal(x2, m2, x2),
        np.stack([t1.theta, t2.theta]),
        corr,
    )
