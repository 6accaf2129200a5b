"""Text file formats: datasets, confidence grids, experiment configs, results.

All files are UTF-8 with LF line endings. Reals are written with 17
significant digits, which round-trips every 64-bit float exactly. Writers
are deterministic: the same input always produces the same bytes.

Dataset file::

    x0,x1,...,x{d-1},label          label -1 marks an unlabeled row

Grid file::

    # grid xmin xmax ymin ymax nx ny
    x,y,conf,argmax                 nx*ny rows, y outer, x inner

Refined-label file::

    x0,...,x{d-1},pred_class,conf,masked

Experiment config: flat ``key=value`` lines, ``#`` comments, blank lines.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from gplabel.bank import BankMode
from gplabel.exceptions import (
    DimensionMismatch,
    FormatError,
    InvalidLabel,
    InvalidValue,
    ParseError,
    UnknownKey,
)
from gplabel.gp import DEFAULT_REFRESH_PERIOD, GpConfig
from gplabel.kernel import KernelParams
from gplabel.refine import DEFAULT_TAU, AggregateSource, RefinementPolicy, RefineVariant
from gplabel.toydata import LabeledDataset

logger = logging.getLogger(__name__)

REAL_FMT = "%.17g"


def _real(x: float) -> str:
    return REAL_FMT % x


def _open_write(path: Path):
    return open(path, "w", encoding="utf-8", newline="\n")


def _rows(path: Path):
    """(line number, fields) for every non-empty line."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as e:
        raise FormatError(f"cannot open {path}: {e.strerror}", cause=e)
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if row:
                yield lineno, row


def _float(text: str, lineno: int, what: str) -> float:
    try:
        value = float(text)
    except ValueError as e:
        raise ParseError(f"line {lineno}: {what} {text!r} is not a number", line=lineno, cause=e)
    if not np.isfinite(value):
        raise ParseError(f"line {lineno}: {what} {text!r} is not finite", line=lineno)
    return value


def _int(text: str, lineno: int, what: str) -> int:
    try:
        return int(text)
    except ValueError as e:
        raise ParseError(f"line {lineno}: {what} {text!r} is not an integer", line=lineno, cause=e)


# =============================================================================
# Dataset file
# =============================================================================


def write_dataset(path: str | Path, ds: LabeledDataset) -> None:
    """Labeled rows first, then unlabeled rows with label -1."""
    d = ds.dim
    parts = [np.column_stack([ds.features, ds.class_ids])]
    if ds.num_unlabeled:
        parts.append(np.column_stack([ds.unlabeled, np.full(ds.num_unlabeled, -1)]))
    data = np.concatenate(parts)
    header = ",".join([*(f"x{i}" for i in range(d)), "label"])
    with _open_write(Path(path)) as fh:
        np.savetxt(
            fh, data, fmt=[REAL_FMT] * d + ["%d"], delimiter=",", header=header, comments=""
        )


def read_dataset(path: str | Path, num_classes: int | None = None) -> LabeledDataset:
    """Parse a dataset file.

    Without `num_classes`, C is the largest label plus one.

    Raises:
        ParseError: malformed header or row; `line` is 1-based.
        InvalidLabel: label outside {-1} U [0, C).
    """
    rows = _rows(Path(path))
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise ParseError(f"{path}: empty file, expected a header", line=1)
    d = len(header) - 1
    if d < 1 or header != [*(f"x{i}" for i in range(d)), "label"]:
        raise ParseError(f"line {lineno}: bad header {','.join(header)!r}", line=lineno)

    feats: list[list[float]] = []
    labels: list[int] = []
    lines: list[int] = []
    for lineno, row in rows:
        if len(row) != d + 1:
            raise ParseError(
                f"line {lineno}: expected {d + 1} fields, got {len(row)}", line=lineno
            )
        feats.append([_float(v, lineno, f"x{i}") for i, v in enumerate(row[:d])])
        labels.append(_int(row[d], lineno, "label"))
        lines.append(lineno)

    X = np.asarray(feats, dtype=np.float64).reshape(-1, d)
    y = np.asarray(labels, dtype=np.intp)
    if num_classes is None:
        num_classes = int(y.max()) + 1 if (y >= 0).any() else 0
    bad = np.flatnonzero((y < -1) | (y >= num_classes))
    if bad.size:
        i = int(bad[0])
        raise InvalidLabel(
            f"line {lines[i]}: label {y[i]} outside {{-1}} U [0, {num_classes})",
            line=lines[i],
            label=int(y[i]),
        )
    labeled = y >= 0
    return LabeledDataset(
        features=X[labeled],
        class_ids=y[labeled],
        unlabeled=X[~labeled],
        num_classes=num_classes,
    )


# =============================================================================
# Grid file
# =============================================================================


class GridSpec(BaseModel):
    """Regular 2-D evaluation grid."""

    model_config = ConfigDict(frozen=True)

    xmin: float = Field(allow_inf_nan=False)
    xmax: float = Field(allow_inf_nan=False)
    ymin: float = Field(allow_inf_nan=False)
    ymax: float = Field(allow_inf_nan=False)
    nx: int = Field(ge=1)
    ny: int = Field(ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> GridSpec:
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError("grid bounds must satisfy xmin <= xmax and ymin <= ymax")
        return self

    @classmethod
    def parse(cls, text: str) -> GridSpec:
        """From "xmin,xmax,ymin,ymax,nx,ny"."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 6:
            raise ValueError(f"grid needs 6 comma-separated values, got {len(parts)}")
        names = ("xmin", "xmax", "ymin", "ymax", "nx", "ny")
        return cls.model_validate(dict(zip(names, parts, strict=True)))

    @staticmethod
    def _axis(lo: float, hi: float, n: int) -> NDArray[np.float64]:
        if n == 1:
            return np.asarray([0.5 * (lo + hi)])
        return np.linspace(lo, hi, n)

    def points(self) -> NDArray[np.float64]:
        """nx*ny x 2 grid points, y outer, x inner."""
        xs = self._axis(self.xmin, self.xmax, self.nx)
        ys = self._axis(self.ymin, self.ymax, self.ny)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def comment(self) -> str:
        vals = " ".join(_real(v) for v in (self.xmin, self.xmax, self.ymin, self.ymax))
        return f"# grid {vals} {self.nx} {self.ny}"


@dataclass
class ConfidenceGrid:
    spec: GridSpec
    points: NDArray[np.float64]
    conf: NDArray[np.float64]
    argmax: NDArray[np.intp]


def write_grid(
    path: str | Path, spec: GridSpec, conf: ArrayLike, argmax: ArrayLike
) -> None:
    pts = spec.points()
    conf = np.asarray(conf, dtype=np.float64).reshape(-1)
    argmax = np.asarray(argmax, dtype=np.intp).reshape(-1)
    if conf.size != pts.shape[0] or argmax.size != pts.shape[0]:
        raise DimensionMismatch(
            f"grid has {pts.shape[0]} points, got {conf.size} confidences",
            expected=pts.shape[0],
            got=conf.size,
        )
    with _open_write(Path(path)) as fh:
        fh.write(spec.comment() + "\n")
        fh.write("x,y,conf,argmax\n")
        for (x, y), c, a in zip(pts, conf, argmax, strict=True):
            fh.write(f"{_real(x)},{_real(y)},{_real(c)},{a}\n")


def read_grid(path: str | Path) -> ConfidenceGrid:
    """Parse a grid file; the row count must equal nx*ny, conf in (0, 1]."""
    rows = _rows(Path(path))
    try:
        lineno, meta = next(rows)
    except StopIteration:
        raise ParseError(f"{path}: empty grid file", line=1)
    fields = meta[0].split() if len(meta) == 1 else []
    if len(fields) != 8 or fields[:2] != ["#", "grid"]:
        raise ParseError(f"line {lineno}: expected '# grid xmin xmax ymin ymax nx ny'", line=lineno)
    try:
        spec = GridSpec.model_validate(
            dict(zip(("xmin", "xmax", "ymin", "ymax", "nx", "ny"), fields[2:], strict=True))
        )
    except ValidationError as e:
        raise ParseError(f"line {lineno}: invalid grid metadata", line=lineno, cause=e)

    lineno, header = next(rows, (lineno + 1, []))
    if header != ["x", "y", "conf", "argmax"]:
        raise ParseError(f"line {lineno}: expected header 'x,y,conf,argmax'", line=lineno)

    pts, conf, arg = [], [], []
    for lineno, row in rows:
        if len(row) != 4:
            raise ParseError(f"line {lineno}: expected 4 fields, got {len(row)}", line=lineno)
        pts.append((_float(row[0], lineno, "x"), _float(row[1], lineno, "y")))
        c = _float(row[2], lineno, "conf")
        if not 0.0 < c <= 1.0:
            raise ParseError(f"line {lineno}: conf {c} outside (0, 1]", line=lineno)
        conf.append(c)
        arg.append(_int(row[3], lineno, "argmax"))
    expected = spec.nx * spec.ny
    if len(conf) != expected:
        raise ParseError(
            f"{path}: {len(conf)} grid rows, metadata says {expected}", line=lineno
        )
    return ConfidenceGrid(
        spec=spec,
        points=np.asarray(pts, dtype=np.float64),
        conf=np.asarray(conf),
        argmax=np.asarray(arg, dtype=np.intp),
    )


# =============================================================================
# Refined-label file
# =============================================================================


@dataclass
class RefinedLabels:
    features: NDArray[np.float64]
    pred_class: NDArray[np.intp]
    conf: NDArray[np.float64]
    masked: NDArray[np.bool_]


def write_refined(path: str | Path, out: RefinedLabels) -> None:
    """`masked` is 1 for rows that pass the confidence threshold."""
    d = out.features.shape[1]
    header = ",".join([*(f"x{i}" for i in range(d)), "pred_class", "conf", "masked"])
    with _open_write(Path(path)) as fh:
        fh.write(header + "\n")
        for x, p, c, m in zip(out.features, out.pred_class, out.conf, out.masked, strict=True):
            fh.write(",".join([*(_real(v) for v in x), str(int(p)), _real(c), str(int(m))]))
            fh.write("\n")


def read_refined(path: str | Path) -> RefinedLabels:
    rows = _rows(Path(path))
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise ParseError(f"{path}: empty file, expected a header", line=1)
    d = len(header) - 3
    if d < 1 or header[d:] != ["pred_class", "conf", "masked"]:
        raise ParseError(f"line {lineno}: bad refined-label header", line=lineno)
    feats, pred, conf, masked = [], [], [], []
    for lineno, row in rows:
        if len(row) != d + 3:
            raise ParseError(f"line {lineno}: expected {d + 3} fields", line=lineno)
        feats.append([_float(v, lineno, "feature") for v in row[:d]])
        pred.append(_int(row[d], lineno, "pred_class"))
        conf.append(_float(row[d + 1], lineno, "conf"))
        flag = _int(row[d + 2], lineno, "masked")
        if flag not in (0, 1):
            raise ParseError(f"line {lineno}: masked must be 0 or 1", line=lineno)
        masked.append(bool(flag))
    return RefinedLabels(
        features=np.asarray(feats, dtype=np.float64).reshape(-1, d),
        pred_class=np.asarray(pred, dtype=np.intp),
        conf=np.asarray(conf),
        masked=np.asarray(masked, dtype=bool),
    )


# =============================================================================
# Experiment config
# =============================================================================


class ModelKind(StrEnum):
    """Predictor producing the weak-view logits."""

    GP = "gp"
    SIMILARITY = "similarity"
    LINEAR = "linear"


_NONE = {"", "none", "null"}


class ExperimentConfig(BaseModel):
    """Hyper-parameters of one experiment, keyed by their dotted file names."""

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    kernel_eta: float = Field(default=1.0, gt=0, allow_inf_nan=False, alias="kernel.eta")
    kernel_length_scale: float = Field(
        default=1.0, gt=0, allow_inf_nan=False, alias="kernel.length_scale"
    )
    kernel_clip: float | None = Field(default=None, ge=0, alias="kernel.clip")
    gp_sigma: float = Field(default=1.0, gt=0, allow_inf_nan=False, alias="gp.sigma")
    gp_lambda: float = Field(default=1.0, gt=0, allow_inf_nan=False, alias="gp.lambda")
    gp_refresh_period: int = Field(
        default=DEFAULT_REFRESH_PERIOD, ge=1, alias="gp.refresh_period"
    )
    bank_capacity: int | None = Field(default=None, ge=1, alias="bank.capacity")
    bank_mode: BankMode = Field(default=BankMode.FIFO, alias="bank.mode")
    refine_policy: RefineVariant = Field(default=RefineVariant.IDENTITY, alias="refine.policy")
    refine_alpha: float = Field(default=0.9, ge=0, le=1, alias="refine.alpha")
    refine_tau: float = Field(default=DEFAULT_TAU, gt=0, le=1, alias="refine.tau")
    refine_temperature: float = Field(
        default=1.0, gt=0, allow_inf_nan=False, alias="refine.temperature"
    )
    refine_model: ModelKind = Field(default=ModelKind.GP, alias="refine.model")
    refine_source: AggregateSource = Field(
        default=AggregateSource.SIMILARITY, alias="refine.source"
    )
    linear_epochs: int = Field(default=2000, ge=1, alias="linear.epochs")
    linear_lr: float = Field(default=0.05, gt=0, allow_inf_nan=False, alias="linear.lr")
    seed: int = 0

    @model_validator(mode="after")
    def _clip_below_eta(self) -> ExperimentConfig:
        if self.kernel_clip is not None and self.kernel_clip >= self.kernel_eta:
            raise ValueError("kernel.clip must be < kernel.eta")
        return self

    @classmethod
    def keys(cls) -> list[str]:
        """Every file key, in the order write_config emits them."""
        return [f.alias or name for name, f in cls.model_fields.items()]

    @property
    def kernel(self) -> KernelParams:
        return KernelParams(
            eta=self.kernel_eta,
            length_scale=self.kernel_length_scale,
            clip_threshold=self.kernel_clip,
        )

    @property
    def gp(self) -> GpConfig:
        return GpConfig(
            kernel=self.kernel,
            sigma=self.gp_sigma,
            logit_scale=self.gp_lambda,
            refresh_period=self.gp_refresh_period,
        )

    @property
    def policy(self) -> RefinementPolicy:
        return RefinementPolicy(
            variant=self.refine_policy,
            temperature=self.refine_temperature,
            alpha=self.refine_alpha,
            source=self.refine_source,
        )


def _key_of(error: dict) -> str:
    loc = error.get("loc") or ()
    if loc:
        return str(loc[0])
    return "kernel.clip" if "kernel.clip" in error.get("msg", "") else ""


def config_from_pairs(pairs: dict[str, str]) -> ExperimentConfig:
    """Validate raw key/value strings.

    Raises:
        UnknownKey: a key outside ExperimentConfig.keys().
        InvalidValue: a value breaks its field's invariant.
    """
    known = set(ExperimentConfig.keys())
    for key in pairs:
        if key not in known:
            raise UnknownKey(f"unknown config key {key!r}", key=key)
    values = {k: (None if v.strip().lower() in _NONE else v.strip()) for k, v in pairs.items()}
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        first = e.errors()[0]
        key = _key_of(first)
        raise InvalidValue(f"invalid value for {key or 'config'}: {first['msg']}", key=key, cause=e)


def read_config(path: str | Path) -> ExperimentConfig:
    """Load a key=value experiment config; absent keys take their defaults."""
    pairs: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(f"cannot read config {path}: {e.strerror}", cause=e)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ParseError(f"line {lineno}: expected key=value, got {raw!r}", line=lineno)
        if key in pairs:
            raise InvalidValue(f"line {lineno}: duplicate key {key!r}", key=key)
        pairs[key] = value
    cfg = config_from_pairs(pairs)
    logger.debug("config %s: %d keys set", path, len(pairs))
    return cfg


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, StrEnum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_config(path: str | Path, cfg: ExperimentConfig) -> None:
    """Every key, one per line, in ExperimentConfig.keys() order."""
    dumped = cfg.model_dump(by_alias=True)
    with _open_write(Path(path)) as fh:
        for key in ExperimentConfig.keys():
            fh.write(f"{key}={_format_value(dumped[key])}\n")


# =============================================================================
# Bench results file
# =============================================================================

BENCH_COLUMNS = (
    "kind",
    "n_q",
    "batch",
    "rounds",
    "threads",
    "classic_ns",
    "efficient_ns",
    "speedup",
    "max_residual",
    "cpu",
    "cpu_count",
)


def append_bench_rows(path: str | Path, rows: list[dict]) -> None:
    """Append result rows, writing the header only when the file is new or empty."""
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    with open(path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        if fresh:
            writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_value(row[k]) for k in BENCH_COLUMNS})
