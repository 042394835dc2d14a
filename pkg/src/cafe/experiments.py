"""Run configurations, task data, single fits, sweeps and the gradient audit.

This is the layer the command line, the acceptance suite and the demo
scripts share: a :class:`RunConfig` names everything a run depends on, and
:func:`fit` turns one into a trained model plus a report.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import data as D
from . import encodings as enc
from . import rng
from . import tensor as T
from .errors import ConfigError
from .io import load_ppm
from .metrics import iou, psnr, psnr_from_mse
from .model import CafeModel, ModelSpec, count_params, depth_for_budget, init_model
from .train import FitReport, TrainConfig, predict, train

TASKS = ("image", "func1d", "occupancy", "noiseblock")
TASK_DIMS = {"image": 2, "func1d": 1, "occupancy": 3, "noiseblock": 2}
DEFAULT_SIZE = {"image": 128, "func1d": 512, "occupancy": 32, "noiseblock": 128}
SIGNALS = ("sines", "ramp_checker")
ABLATION_AXES = ("N", "L_mlp", "scale", "J", "M")

# Desk-scale protocol for grid tasks. Full-grid steps on a 128x128 image cost
# ~4x more per iteration on one core, so steps use shuffled 4096-sample
# batches; the learning rate was picked for that batching on the default
# CAFE+ image fit.
DESK_BATCH = 4096
DESK_LR = 5e-3


@dataclass(frozen=True)
class RunConfig:
    """Everything one run depends on. Field names double as config keys."""

    task: str = "image"
    encoder: str = "cafeplus"
    M: int = 24
    J: int = 16
    N: int = 3
    D_h: int = 64
    L_mlp: int = 1
    scale: float = 30.0
    base: float = 2.0
    fourier: str = "rff"
    freqs: str = ""
    seed: int = 0
    iterations: int = 2000
    lr: float = 1e-3
    lr_decay: float = 0.1
    decay_at: float = 0.7
    batch_size: int = 0
    size: int = 0
    rho: float = 0.25
    signal: str = "sines"
    input: str = ""
    out: str = "runs"
    checkpoint: str = ""
    axis: str = "N"
    values: str = "1,2,3"
    seeds: str = ""

    def validate(self) -> "RunConfig":
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.signal not in SIGNALS:
            raise ConfigError(f"unknown signal {self.signal!r}; expected one of {SIGNALS}")
        if self.size < 0:
            raise ConfigError(f"size must be >= 0, got {self.size}")
        if not 0 < self.rho <= 1:
            raise ConfigError(f"rho must be in (0, 1], got {self.rho}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")
        if self.axis not in ABLATION_AXES:
            raise ConfigError(f"unknown ablation axis {self.axis!r}; expected one of {ABLATION_AXES}")
        try:
            self.train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.model_spec(out_dim=1)
        return self

    @property
    def dim(self) -> int:
        return TASK_DIMS[self.task]

    @property
    def grid_size(self) -> int:
        return self.size or DEFAULT_SIZE[self.task]

    def frequency_list(self) -> np.ndarray | None:
        """``freqs`` as an (M, D) array, or None when unset.

        Vectors are separated by ``;`` and components by ``,`` or spaces, so
        ``"1,2"`` is two 1-D frequencies and ``"1 0; 0 1"`` two 2-D ones.
        """
        if not self.freqs.strip():
            return None
        if ";" in self.freqs:
            rows = [r.replace(",", " ").split() for r in self.freqs.split(";") if r.strip()]
        else:
            rows = [[v] for v in self.freqs.replace(",", " ").split()]
        try:
            return np.array([[float(v) for v in r] for r in rows], dtype=np.float64)
        except ValueError:
            raise ConfigError(f"cannot parse freqs {self.freqs!r}") from None

    def basis(self, D: int | None = None) -> enc.FrequencyBasis | None:
        freqs = self.frequency_list()
        if freqs is None:
            return None
        D = self.dim if D is None else D
        if freqs.shape[1] != D:
            raise ConfigError(f"freqs have dimension {freqs.shape[1]}, task {self.task} needs {D}")
        return enc.explicit_basis(freqs)

    def model_spec(self, out_dim: int = 1, D: int | None = None) -> ModelSpec:
        freqs = self.frequency_list()
        M = self.M if freqs is None else freqs.shape[0]
        spec = ModelSpec(encoder=self.encoder, D=self.dim if D is None else D, M=M, J=self.J,
                         N=self.N, D_h=self.D_h, L_mlp=self.L_mlp, out_dim=out_dim,
                         scale=self.scale, base=self.base, fourier=self.fourier, seed=self.seed)
        return spec.validate()

    def train_config(self) -> TrainConfig:
        return TrainConfig(iterations=self.iterations, lr=self.lr, lr_decay=self.lr_decay,
                           decay_at=self.decay_at, batch_size=self.batch_size, seed=self.seed)

    def seed_list(self) -> list[int]:
        if not self.seeds.strip():
            return [self.seed]
        return [int(s) for s in self.seeds.replace(",", " ").split()]

    def as_dict(self) -> dict:
        return asdict(self)


def desk_config(**overrides) -> RunConfig:
    """The desk-scale protocol (by default the 128x128 image, 2000 iterations)."""
    return replace(RunConfig(task="image", batch_size=DESK_BATCH, lr=DESK_LR), **overrides)


@dataclass
class TaskData:
    task: str
    coords: np.ndarray
    targets: np.ndarray
    shape: tuple

    @property
    def out_dim(self) -> int:
        return self.targets.shape[1]


def load_task(cfg: RunConfig) -> TaskData:
    n = cfg.grid_size
    if cfg.task == "image":
        img = load_ppm(cfg.input) if cfg.input else D.desk_image()
        return TaskData("image", D.make_coord_grid(img.width, img.height), img.flat(),
                        img.values.shape)
    if cfg.task == "noiseblock":
        img = D.generate_noise_block(n, cfg.rho, cfg.seed)
        return TaskData("noiseblock", D.make_coord_grid(n, n), img.flat(), img.values.shape)
    if cfg.task == "occupancy":
        grid = D.sphere_occupancy(n)
        return TaskData("occupancy", D.coord_grid_3d(n), grid.flat(), grid.values.shape)
    x = D.coord_grid_1d(n)
    y = D.product_of_sines(x) if cfg.signal == "sines" else D.ramp_plus_checker(n)
    return TaskData("func1d", x, y, (n,))


def evaluate(model: CafeModel, task: TaskData) -> tuple[str, float]:
    """The task's headline metric: IoU for occupancy, PSNR otherwise.

    1-D functions may leave [0, 1], so their PSNR is taken from the raw MSE
    without clamping.
    """
    pred = predict(model, task.coords)
    if task.task == "occupancy":
        return "iou", iou(pred.reshape(task.shape), task.targets.reshape(task.shape))
    if task.task == "func1d":
        return "psnr", psnr_from_mse(float(np.mean((pred - task.targets) ** 2)))
    return "psnr", psnr(pred, task.targets)


@dataclass
class FitResult:
    config: RunConfig
    model: CafeModel
    report: FitReport
    task: TaskData = field(repr=False)
    wall: float = 0.0

    @property
    def metric(self) -> float:
        return self.report.metric

    def prediction(self) -> np.ndarray:
        return predict(self.model, self.task.coords)


def build_model(cfg: RunConfig, out_dim: int = 1) -> CafeModel:
    return init_model(cfg.model_spec(out_dim), cfg.basis())


def fit(cfg: RunConfig, echo: bool = False) -> FitResult:
    start = time.perf_counter()
    cfg = cfg.validate()
    task = load_task(cfg)
    model = build_model(cfg, task.out_dim)
    model, report = train(model, task.coords, task.targets, cfg.train_config(),
                          echo=cfg.as_dict())
    if echo:
        for step, loss in report.losses:
            print(f"step {step:6d}  loss {loss:.6e}")
    report.metric_name, report.metric = evaluate(model, task)
    return FitResult(cfg, model, report, task, time.perf_counter() - start)


_FIT_CACHE: dict[RunConfig, FitResult] = {}


def fit_cached(cfg: RunConfig) -> FitResult:
    """:func:`fit`, memoised per configuration for the lifetime of the process."""
    key = replace(cfg, out="", checkpoint="")
    if key not in _FIT_CACHE:
        _FIT_CACHE[key] = fit(key)
    return _FIT_CACHE[key]


def report_row(run_id: str, result: FitResult) -> dict:
    cfg, rep = result.config, result.report
    return {"run_id": run_id, "task": cfg.task, "encoder": cfg.encoder, "N": cfg.N,
            "M": result.model.basis.M, "J": cfg.J, "D_h": cfg.D_h, "params": rep.params,
            "iters": cfg.iterations, "seed": cfg.seed,
            "final_psnr_or_iou": f"{rep.metric:.6f}", "seconds": f"{rep.seconds:.3f}"}


def _parse_axis_value(axis: str, text: str):
    kind = float if axis == "scale" else int
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as a value of {axis}") from None


def sweep_points(cfg: RunConfig) -> list[tuple[str, RunConfig]]:
    """Single-axis sweep over ``cfg.values`` for every seed, in declared order."""
    values = [_parse_axis_value(cfg.axis, v) for v in cfg.values.replace(",", " ").split()]
    if not values:
        raise ConfigError("ablate needs at least one value")
    points = []
    for v in values:
        for s in cfg.seed_list():
            point = replace(cfg, **{cfg.axis: v}, seed=s).validate()
            points.append((f"{cfg.axis}={v}/seed={s}", point))
    return points


def _sweep_one(point: tuple[str, RunConfig]) -> dict:
    run_id, cfg = point
    return report_row(run_id, fit_cached(cfg))


def sweep(cfg: RunConfig, threads: int | None = None) -> list[dict]:
    """Run every sweep point; rows come back in declared order.

    ``threads`` defaults to the ``CAFE_THREADS`` environment variable (1 if
    unset). Each run is independent, so they fan out over processes.
    """
    points = sweep_points(cfg)
    if threads is None:
        threads = int(os.environ.get("CAFE_THREADS", "1") or 1)
    if threads <= 1 or len(points) == 1:
        return [_sweep_one(p) for p in points]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_sweep_one, points))


def component_variants(cfg: RunConfig) -> dict[str, RunConfig]:
    """Parameter-matched component ablation around a CAFE+ configuration.

    Every variant keeps the feature width ``F = 2M + D J``: dropping the
    Chebyshev block moves its width into extra Fourier frequencies, and
    dropping the parallel stack deepens the MLP to the nearest parameter
    count.
    """
    if cfg.encoder != "cafeplus":
        raise ConfigError("component ablation starts from a cafeplus configuration")
    d = cfg.dim
    M_wide = cfg.M + (d * cfg.J) // 2
    target = count_params(build_model(cfg))

    def matched(encoder, M, J):
        spec = replace(cfg, encoder=encoder, M=M, J=J, N=0).model_spec()
        return replace(cfg, encoder=encoder, M=M, J=J, N=0, L_mlp=depth_for_budget(spec, target))

    return {
        "neither": matched("rff", M_wide, 0),
        "chebyshev": matched("chebyshev", cfg.M, cfg.J),
        "cafe": replace(cfg, encoder="cafe", M=M_wide, J=0),
        "cafeplus": cfg,
    }


# ---------------------------------------------------------------------------
# gradient audit


@dataclass(frozen=True)
class AuditResult:
    max_rel_error: float
    per_param: tuple[float, ...]
    params: int
    kinks: int = 0

    def passed(self, tol: float = 1e-6) -> bool:
        # at a ReLU kink the loss has no gradient to compare against
        return self.kinks == 0 and self.max_rel_error < tol


def relu_preactivations(model: CafeModel, phi: np.ndarray) -> list[np.ndarray]:
    """Inputs to every ReLU of the MLP for feature rows ``phi``."""
    z = model.psi(T.Tensor(phi)).data if model.stack else phi
    out = []
    for w, b in model.mlp[:-1]:
        pre = z @ w.data.T + b.data
        out.append(pre)
        z = np.maximum(pre, 0.0)
    return out


def gradient_audit(model: CafeModel, batch: int = 8, seed: int = 0, h: float = 1e-5,
                   floor: float = 1e-4) -> AuditResult:
    """Compare reverse-mode parameter gradients of the MSE loss with central differences.

    Inputs and targets come from the ``probe`` stream. ``floor`` bounds the
    denominator of the relative error, see :func:`tensor.relative_error`:
    below it the central-difference round-off (about ``eps |L| / h``) is
    larger than any real disagreement. ReLU inputs within ``10 h`` of zero
    are counted as ``kinks``; a stencil that straddles one averages two
    one-sided slopes, so such an audit does not pass.
    """
    gen = rng.stream(seed, "probe")
    x = rng.uniform(gen, -0.95, 0.95, (batch, model.D))
    y = rng.uniform(gen, -1.0, 1.0, (batch, model.spec.out_dim))
    phi = model.features(x).values
    params = model.parameters()
    analytic = T.grads_for(params, T.mse_loss(model.forward_features(phi), y))

    probe = model.copy()
    probe_params = probe.parameters()

    def loss(arrays):
        for p, a in zip(probe_params, arrays):
            p.data = a
        return T.mse_loss(probe.forward_features(phi), y).item()

    numeric = T.finite_diff_grad(loss, [p.data for p in params], h=h)
    errs = tuple(T.relative_error(a, n, floor=floor) for a, n in zip(analytic, numeric))
    kinks = sum(int(np.count_nonzero(np.abs(z) <= 10 * h)) for z in relu_preactivations(model, phi))
    return AuditResult(max(errs, default=0.0), errs, count_params(model), kinks)


def audit_config(cfg: RunConfig, **kwargs) -> AuditResult:
    return gradient_audit(build_model(cfg), seed=cfg.seed, **kwargs)
