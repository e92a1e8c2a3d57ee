"""Monte-Carlo SER sweeps, result files and experiment configuration.

Detector names used in configs and on the command line::

    ml | mf | mmse | mf_pic[:iters] | fcnn:<checkpoint> | cnn2d:<checkpoint>

At a given SNR point every detector sees the same symbols, channels and
noise (drawn from child stream ``(2, point)`` of the sweep seed), so
detector comparisons are paired.
"""

import csv
import io
import json
import logging
import os
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .channel import make_link, snr_to_noise_variance
from .checkpoint import load_checkpoint
from .detectors import detect_mf, detect_mf_pic, detect_ml, detect_mmse
from .errors import ConfigError, ConvergenceError
from .numerics import RNG_ALGORITHM, RandomStream, sample_complex_gaussian, strict_mode
from .signatures import generate_grassmann, generate_wbe, load_sequences, select_sequences
from .trainer import predict, preprocess

log = logging.getLogger(__name__)

SEED_ENV = "WSMA_SEED"
CSV_HEADER = ("detector", "snr_db", "trials", "symbol_errors", "ser", "stderr", "seed")
_CHUNK = 5000
_DETECTOR_RE = re.compile(r"^(ml|mf|mmse|mf_pic(?::(\d+))?|(fcnn|cnn2d):(.+))$")


def default_seed(fallback=0):
    """Seed from the ``WSMA_SEED`` environment variable, else ``fallback``."""
    value = os.environ.get(SEED_ENV)
    return int(value) if value not in (None, "") else fallback


@dataclass
class SweepConfig:
    K: int = 2
    L: int = 2
    Nr: int = 3
    M: int = 4
    sequence_type: str = "grassmann"  # grassmann | wbe | file
    sequence_file: str = None
    # sequences generated before keeping the first K; default max(K, 2L)
    sequence_pool: int = None
    snr_grid_db: list = field(default_factory=lambda: [0, 4, 8, 12, 16, 20, 24])
    trials_per_point: int = 10_000
    detectors: list = field(default_factory=lambda: ["ml", "mf", "mf_pic:3"])
    seed: int = None
    stratified: bool = False
    strict: bool = True
    output: str = "results.csv"
    data_dir: str = None  # gnuplot two-column files; None disables

    def __post_init__(self):
        if self.seed is None:
            self.seed = default_seed()
        self.snr_grid_db = [float(s) for s in np.atleast_1d(self.snr_grid_db)]
        bad = []
        if self.trials_per_point < 1:
            bad.append("trials_per_point")
        if not self.snr_grid_db:
            bad.append("snr_grid_db")
        if self.sequence_type not in ("grassmann", "wbe", "file"):
            bad.append("sequence_type")
        if self.sequence_type == "file" and not self.sequence_file:
            bad.append("sequence_file")
        for d in self.detectors:
            if not _DETECTOR_RE.match(d):
                bad.append(f"detectors[{d}]")
        if bad:
            raise ConfigError(f"invalid config fields: {', '.join(bad)}", bad)

    @classmethod
    def from_file(cls, path):
        """Load a flat ``key: value`` YAML file."""
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a flat key/value mapping")
        unknown = sorted(set(data) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigError(f"{path}: unknown config fields: {', '.join(unknown)}", unknown)
        return cls(**data)


def build_sequences(config):
    """Spread matrix for a sweep: generate a pool, keep the first K columns."""
    if config.sequence_type == "file":
        S = load_sequences(config.sequence_file)
    else:
        pool = config.sequence_pool or max(config.K, 2 * config.L)
        gen = generate_grassmann if config.sequence_type == "grassmann" else generate_wbe
        stream = RandomStream(config.seed).child(0)
        try:
            S = gen(pool, config.L, stream)
        except ConvergenceError as exc:
            log.warning("sequence design did not converge (%s); using best set found", exc)
            S = exc.best
    if S.L != config.L or S.K < config.K:
        raise ConfigError(f"sequence set is {S.L}x{S.K}, need L={config.L} and >= {config.K} sequences",
                          ["sequence_file"])
    return select_sequences(S, config.K)


class Detector:
    """Named detector callable on stacks of frames."""

    def __init__(self, name, link, checkpoint=None):
        m = _DETECTOR_RE.match(name)
        if not m:
            raise ConfigError(f"unknown detector {name!r}", ["detectors"])
        self.name = name
        self.link = link
        self.kind = m.group(3) or m.group(1).split(":")[0]
        self.iterations = int(m.group(2) or 3)
        self.model = None
        if self.kind in ("fcnn", "cnn2d"):
            self._load(m.group(4))

    def _load(self, path):
        if not path:
            raise ConfigError(f"detector {self.name}: missing checkpoint path", ["detectors"])
        if not Path(path).exists():
            raise ConfigError(f"detector {self.name}: checkpoint {path} not found", ["detectors"])
        link = self.link
        params, spec, codebook, meta = load_checkpoint(
            path, expected={"K": link.K, "M": link.M, "L": link.L, "Nr": link.Nr})
        S = meta.get("sequences")
        if S is not None and not np.allclose(S.columns, link.sequences.columns, atol=1e-12):
            raise ConfigError(f"detector {self.name}: checkpoint was trained with different "
                              "signature sequences", ["detectors"])
        include_S = bool(meta.get("train", {}).get("include_spread_matrix", False))
        self.model = (params, spec, codebook, include_S)

    def __call__(self, y, ch, heff, sigma2_z):
        """Per-UE alphabet indices of shape ``(T, K)``."""
        a = self.link.alphabet
        if self.kind == "ml":
            return detect_ml(y, heff, self.link.grid).symbol_indices
        if self.kind == "mf":
            return detect_mf(y, heff, a).symbol_indices
        if self.kind == "mf_pic":
            return detect_mf_pic(y, heff, a, self.iterations).symbol_indices
        if self.kind == "mmse":
            return detect_mmse(y, heff, sigma2_z, a).symbol_indices
        params, spec, codebook, include_S = self.model
        inputs = preprocess(self.kind, y, ch, self.link.sequences if include_S else None)
        return predict(params, spec, inputs, codebook).symbol_indices


@dataclass(frozen=True)
class SerPoint:
    detector: str
    snr_db: float
    trials: int
    symbol_errors: int
    K: int
    seed: int

    @property
    def ser(self):
        return self.symbol_errors / (self.trials * self.K)

    @property
    def stderr(self):
        p = self.ser
        return float(np.sqrt(p * (1 - p) / (self.trials * self.K)))


def _point_key(snr_db):
    # spawn keys must be non-negative; millidecibel resolution
    return int(round(snr_db * 1000)) + 2**31


def _draw_trials(link, snr_db, trials, seed, stratified, chunk):
    """Yield ``(symbol_idx, ch, heff, y, sigma2)`` chunks for one SNR point."""
    sigma2 = snr_to_noise_variance(snr_db)
    root = RandomStream(seed).child(2, _point_key(snr_db))
    G = len(link.grid)
    for c, start in enumerate(range(0, trials, chunk)):
        n = min(chunk, trials - start)
        stream = root.child(c)
        if stratified:
            joint = (start + np.arange(n)) % G
        else:
            joint = stream.rng.integers(0, G, n)
        ch, heff = link.sample(stream, n)
        x = link.grid.entries[joint]
        y = np.einsum("tnk,tk->tn", heff.H, x) + sample_complex_gaussian(stream, None, sigma2,
                                                                         size=(n, link.N))
        yield link.grid.indices[joint], ch, heff, y, sigma2


def evaluate_points(link, detectors, snr_db, trials, seed, stratified=False, chunk=_CHUNK):
    """SER of several detectors at one SNR over shared realizations."""
    errors = {d.name: 0 for d in detectors}
    for truth, ch, heff, y, sigma2 in _draw_trials(link, snr_db, trials, seed, stratified, chunk):
        for d in detectors:
            errors[d.name] += int(np.count_nonzero(d(y, ch, heff, sigma2) != truth))
    return [SerPoint(d.name, float(snr_db), trials, errors[d.name], link.K, seed) for d in detectors]


def evaluate_ser(config, detector, snr_db, link=None):
    """One SER point for a single detector (name or :class:`Detector`)."""
    if link is None:
        link = make_link(config.K, config.L, config.Nr, config.M, build_sequences(config))
    if isinstance(detector, str):
        detector = Detector(detector, link)
    with strict_mode(config.strict):
        return evaluate_points(link, [detector], snr_db, config.trials_per_point, config.seed,
                               config.stratified)[0]


def run_sweep(config, link=None):
    """All detectors over the SNR grid; returns a list of :class:`SerPoint`."""
    if link is None:
        link = make_link(config.K, config.L, config.Nr, config.M, build_sequences(config))
    detectors = [Detector(name, link) for name in config.detectors]
    points = []
    with strict_mode(config.strict):
        for snr in config.snr_grid_db:
            pts = evaluate_points(link, detectors, snr, config.trials_per_point, config.seed,
                                  config.stratified)
            for p in pts:
                log.info("%-10s %6.2f dB  SER %.5f", p.detector, p.snr_db, p.ser)
            points.extend(pts)
    # rows grouped by detector, then SNR
    order = {name: i for i, name in enumerate(config.detectors)}
    return sorted(points, key=lambda p: (order[p.detector], p.snr_db))


def _fmt(x):
    return repr(float(x))


def format_csv(points):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in points:
        writer.writerow([p.detector, _fmt(p.snr_db), p.trials, p.symbol_errors, _fmt(p.ser),
                         _fmt(p.stderr), p.seed])
    return buf.getvalue()


def write_csv(points, path):
    Path(path).write_bytes(format_csv(points).encode("utf-8"))


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_data_files(points, directory):
    """One ``<detector>.dat`` per detector with ``snr_db ser`` columns."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in dict.fromkeys(p.detector for p in points):
        kind, _, arg = name.partition(":")
        label = f"{kind}_{Path(arg).stem}" if kind in ("fcnn", "cnn2d") else kind + arg
        path = directory / (re.sub(r"[^A-Za-z0-9_.-]+", "_", label) + ".dat")
        lines = [f"# {name}: snr_db ser"]
        lines += [f"{_fmt(p.snr_db)} {_fmt(p.ser)}" for p in points if p.detector == name]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def run_experiment(config_path):
    """Run the sweep described by a config file and write its outputs.

    Writes the results CSV, a ``.meta.json`` file next to it (package
    version, RNG, seed, resolved config) and, if ``data_dir`` is set, the
    gnuplot data files. Returns the list of points.
    """
    config = config_path if isinstance(config_path, SweepConfig) else SweepConfig.from_file(config_path)
    points = run_sweep(config)
    write_csv(points, config.output)
    meta = {"package_version": __version__, "rng": RNG_ALGORITHM, "config": asdict(config)}
    Path(str(config.output) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                                       encoding="utf-8")
    if config.data_dir:
        write_data_files(points, config.data_dir)
    return points
