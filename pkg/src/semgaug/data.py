"""Dataset handling: synthesis, segmentation, standardization, splits, I/O.

A dataset is a collection of fixed-length multichannel windows, each
carrying a gesture label, a trial index and a subject id. Windows are
stored stacked as one (n, C, L) float array for efficiency; `SignalWindow`
views are materialized on demand.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BadMagicError, ConfigError, ShapeMismatchError, TruncatedPayloadError

EPS_STD = 1e-8

MAGIC = b"SAUG"
FORMAT_VERSION = 1


@dataclass
class SignalRecording:
    subject_id: int
    gesture_label: int
    trial_index: int
    sample_rate: float
    values: np.ndarray  # (C, N)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise ValueError(f"recording values must be (C>=1, N>=1), got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("recording contains non-finite values")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")


@dataclass
class SignalWindow:
    values: np.ndarray  # (C, L)
    gesture_label: int
    trial_index: int
    subject_id: int


@dataclass
class WindowedDataset:
    values: np.ndarray  # (n, C, L)
    labels: np.ndarray  # (n,) int
    trials: np.ndarray  # (n,) int
    subjects: np.ndarray  # (n,) int
    class_count: int
    split_tag: str = "train"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.trials = np.asarray(self.trials, dtype=np.int64)
        self.subjects = np.asarray(self.subjects, dtype=np.int64)
        if self.values.ndim != 3:
            raise ValueError("dataset values must have shape (n, C, L)")
        n = self.values.shape[0]
        if not (len(self.labels) == len(self.trials) == len(self.subjects) == n):
            raise ValueError("metadata arrays must match window count")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError("labels must lie in [0, class_count)")

    def __len__(self):
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape[1], self.values.shape[2]

    @property
    def windows(self):
        return [
            SignalWindow(self.values[i], int(self.labels[i]), int(self.trials[i]), int(self.subjects[i]))
            for i in range(len(self))
        ]

    @classmethod
    def from_windows(cls, windows, class_count=None, split_tag="train"):
        if not windows:
            raise ValueError("empty window list")
        shape = windows[0].values.shape
        for w in windows:
            if w.values.shape != shape:
                raise ValueError("all windows must share (C, L)")
        values = np.stack([w.values for w in windows])
        labels = np.array([w.gesture_label for w in windows])
        if class_count is None:
            class_count = int(labels.max()) + 1
        return cls(
            values=values,
            labels=labels,
            trials=np.array([w.trial_index for w in windows]),
            subjects=np.array([w.subject_id for w in windows]),
            class_count=class_count,
            split_tag=split_tag,
        )

    def replace_values(self, values):
        return WindowedDataset(values, self.labels.copy(), self.trials.copy(), self.subjects.copy(),
                               self.class_count, self.split_tag)


@dataclass
class SplitSpec:
    train_trials: frozenset
    test_trials: frozenset

    def __post_init__(self):
        self.train_trials = frozenset(int(t) for t in self.train_trials)
        self.test_trials = frozenset(int(t) for t in self.test_trials)
        if self.train_trials & self.test_trials:
            raise ConfigError("train and test trial sets overlap")


@dataclass
class ChannelStats:
    mean: np.ndarray  # (C,)
    std: np.ndarray  # (C,)

    def apply(self, dataset: WindowedDataset) -> WindowedDataset:
        scaled = (dataset.values - self.mean[None, :, None]) / np.maximum(self.std, EPS_STD)[None, :, None]
        return dataset.replace_values(scaled)


def _ms_to_samples(ms, sample_rate, what):
    raw = ms * sample_rate / 1000.0
    rounded = round(raw)
    if abs(raw - rounded) > 1e-9 or rounded < 1:
        raise ConfigError(f"{what} of {ms} ms is not a whole number of samples at {sample_rate} Hz")
    return int(rounded)


def segment_windows(recording: SignalRecording, window_ms: float, step_ms: float):
    """Slice a recording into overlapping windows; label/trial/subject are inherited."""
    L = _ms_to_samples(window_ms, recording.sample_rate, "window length")
    S = _ms_to_samples(step_ms, recording.sample_rate, "step")
    N = recording.values.shape[1]
    if N < L:
        return []
    count = (N - L) // S + 1
    return [
        SignalWindow(
            recording.values[:, i * S : i * S + L].copy(),
            recording.gesture_label,
            recording.trial_index,
            recording.subject_id,
        )
        for i in range(count)
    ]


def standardize_channels(dataset: WindowedDataset):
    """Zero-mean / unit-std per channel, moments taken over the given (train) split.

    Returns the standardized dataset and the stats so test/generated data can
    be scaled with the same train moments.
    """
    if len(dataset) == 0:
        raise ValueError("cannot standardize an empty dataset")
    mean = dataset.values.mean(axis=(0, 2))
    std = dataset.values.std(axis=(0, 2))
    stats = ChannelStats(mean=mean, std=std)
    return stats.apply(dataset), stats


def split_by_trials(windows, spec: SplitSpec):
    """Route windows into train/test by trial index; unlisted trials are dropped."""
    train = [w for w in windows if w.trial_index in spec.train_trials]
    test = [w for w in windows if w.trial_index in spec.test_trials]
    if not train or not test:
        raise ValueError("trial split produced an empty train or test set")
    labels = [w.gesture_label for w in windows]
    K = int(max(labels)) + 1
    return (
        WindowedDataset.from_windows(train, class_count=K, split_tag="train"),
        WindowedDataset.from_windows(test, class_count=K, split_tag="test"),
    )


def _smooth_envelope(rng, n, sample_rate):
    # sum of a few slow sinusoids -> smooth positive amplitude modulation
    t = np.arange(n) / sample_rate
    env = np.zeros(n)
    for _ in range(3):
        f = rng.uniform(0.5, 3.0)
        env += rng.uniform(0.3, 1.0) * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    return np.exp(0.3 * env / 3.0)


def synth_dataset(seed, K, trials, windows_per_trial, C, L, sample_rate=2000.0,
                  base_freq=62.5, freq_step=31.25, noise_std=0.25):
    """Deterministic synthetic recordings: one class per carrier frequency.

    Class k emits a carrier at base_freq + k*freq_step plus a weaker second
    harmonic, amplitude-modulated by smooth random envelopes, with per-trial
    phase/amplitude jitter and additive Gaussian noise. Each recording is
    sized to yield exactly `windows_per_trial` non-overlapping windows of
    length L.
    """
    if K < 2:
        raise ConfigError("synthetic dataset needs K >= 2 classes")
    if C < 1 or L < 32:
        raise ConfigError("need C >= 1 channels and L >= 32 samples")
    N = windows_per_trial * L
    t = np.arange(N) / sample_rate
    recordings = []
    for k in range(K):
        class_rng = np.random.default_rng([seed, k])
        gains = class_rng.uniform(0.4, 1.3, size=(C, 2))
        f1 = base_freq + k * freq_step
        f2 = 2.0 * f1
        for trial in range(1, trials + 1):
            rng = np.random.default_rng([seed, k, trial])
            amp = rng.uniform(0.85, 1.15)
            values = np.empty((C, N))
            for c in range(C):
                env1 = _smooth_envelope(rng, N, sample_rate)
                env2 = _smooth_envelope(rng, N, sample_rate)
                ph1 = rng.uniform(0, 2 * np.pi)
                ph2 = rng.uniform(0, 2 * np.pi)
                sig = gains[c, 0] * env1 * np.sin(2 * np.pi * f1 * t + ph1)
                sig += 0.35 * gains[c, 1] * env2 * np.sin(2 * np.pi * f2 * t + ph2)
                values[c] = amp * sig + rng.normal(0.0, noise_std, size=N)
            recordings.append(SignalRecording(0, k, trial, sample_rate, values))
    return recordings


def exclude_labels(windows, excluded):
    """Drop windows whose label is in `excluded` (e.g. a rest class)."""
    excluded = set(excluded)
    return [w for w in windows if w.gesture_label not in excluded]


def save_dataset(dataset: WindowedDataset, path):
    n = len(dataset)
    C, L = dataset.shape
    header = np.array([n, C, L, dataset.class_count], dtype="<u4")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.array([FORMAT_VERSION], dtype="<u4").tobytes())
        fh.write(header.tobytes())
        for i in range(n):
            meta = np.array(
                [dataset.labels[i], dataset.trials[i], dataset.subjects[i], 0], dtype="<u2"
            )
            fh.write(meta.tobytes())
            fh.write(dataset.values[i].astype("<f4").tobytes())


def load_dataset(path, split_tag="train") -> WindowedDataset:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise BadMagicError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    if len(blob) < 8 + 16:
        raise TruncatedPayloadError("truncated payload: header incomplete")
    version = int(np.frombuffer(blob, "<u4", count=1, offset=4)[0])
    if version != FORMAT_VERSION:
        raise ShapeMismatchError(f"unsupported container version {version}")
    n, C, L, K = (int(v) for v in np.frombuffer(blob, "<u4", count=4, offset=8))
    record = 8 + C * L * 4
    expected = 24 + n * record
    if len(blob) < expected:
        raise TruncatedPayloadError(
            f"truncated payload: header declares {n} windows, file holds "
            f"{(len(blob) - 24) // record if record else 0}"
        )
    if len(blob) > expected:
        raise ShapeMismatchError("payload larger than header declares")
    values = np.empty((n, C, L))
    labels = np.empty(n, dtype=np.int64)
    trials = np.empty(n, dtype=np.int64)
    subjects = np.empty(n, dtype=np.int64)
    off = 24
    for i in range(n):
        meta = np.frombuffer(blob, "<u2", count=4, offset=off)
        labels[i], trials[i], subjects[i] = int(meta[0]), int(meta[1]), int(meta[2])
        vals = np.frombuffer(blob, "<f4", count=C * L, offset=off + 8)
        values[i] = vals.reshape(C, L)
        off += record
    if n and labels.max() >= K:
        raise ShapeMismatchError("label outside declared class count")
    return WindowedDataset(values, labels, trials, subjects, class_count=K, split_tag=split_tag)


def import_csv(path, channels, length, class_count=None, split_tag="train") -> WindowedDataset:
    """CSV rows: label, trial, subject, then C*L floats (row-major)."""
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    want = 3 + channels * length
    if rows.shape[1] != want:
        raise ShapeMismatchError(
            f"CSV row has {rows.shape[1]} fields, expected {want} for C={channels}, L={length}"
        )
    labels = rows[:, 0].astype(np.int64)
    if class_count is None:
        class_count = int(labels.max()) + 1
    return WindowedDataset(
        values=rows[:, 3:].reshape(-1, channels, length),
        labels=labels,
        trials=rows[:, 1].astype(np.int64),
        subjects=rows[:, 2].astype(np.int64),
        class_count=class_count,
        split_tag=split_tag,
    )


def concat_datasets(a: WindowedDataset, b: WindowedDataset, split_tag="train") -> WindowedDataset:
    if a.shape != b.shape:
        raise ValueError("datasets have mismatched (C, L)")
    K = max(a.class_count, b.class_count)
    return WindowedDataset(
        np.concatenate([a.values, b.values]),
        np.concatenate([a.labels, b.labels]),
        np.concatenate([a.trials, b.trials]),
        np.concatenate([a.subjects, b.subjects]),
        class_count=K,
        split_tag=split_tag,
    )


def shuffle_dataset(dataset: WindowedDataset, rng) -> WindowedDataset:
    order = rng.permutation(len(dataset))
    return WindowedDataset(
        dataset.values[order], dataset.labels[order], dataset.trials[order],
        dataset.subjects[order], dataset.class_count, dataset.split_tag,
    )
