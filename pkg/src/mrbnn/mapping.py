"""Mapping of CONV/FC layers onto vector-dot-product (VDP) units.

Every output element of a layer is a dot product; dot products are split
into sub-vectors of at most ``n_a`` elements, summed by per-arm
photodetectors and then across arms. Work-plan slices are assigned
round-robin over (VDP unit, arm); the same wavelength comb is reused by
every arm, so the unique wavelength count equals the per-arm activation MR
count, independent of the number of arms and VDP units.

Two readings of ``n_a`` coexist deliberately: throughput equations use
``n_a * n_wg`` weights per VDP per step, while physical per-arm MR counts
are capped at the bank limit (n_a distributed over arms when it exceeds the
cap). Both are exposed as distinct properties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bnn import LayerKind, QuantModel, bn_fold
from .errors import DomainError, PhysicalConstraintError


@dataclass(frozen=True)
class AcceleratorConfig:
    """VDP array geometry: (N_A, N_VDP, N_WG) plus layout constants."""

    n_a: int
    n_vdp: int
    n_wg: int
    n_b: int = 1
    mrs_per_bank_max: int = 15
    channel_spacing_nm: float = 1.0
    center_wavelength_nm: float = 1550.0
    mr_pitch_um: float = 5.0
    passband_nm: float = 20.0

    def __post_init__(self):
        for name in ("n_a", "n_vdp", "n_wg", "n_b"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.channel_spacing_nm <= 0 or self.mr_pitch_um <= 0:
            raise DomainError("spacing and pitch must be positive")

    # -- throughput-side quantities (pipeline equations) --

    @property
    def n_w(self) -> int:
        """Weight MR count mirrors the activation count (N_W = N_A)."""
        return self.n_a

    @property
    def vector_size_per_vdp(self) -> int:
        return self.n_wg * self.n_a

    @property
    def weights_per_vdp_step(self) -> int:
        """N_w of the pipeline equations: weights a VDP retires per step."""
        return self.n_a * self.n_wg

    @property
    def dacs_per_vdp(self) -> int:
        """One shared (ping-pong buffered) DAC array of N_A converters."""
        return self.n_a

    # -- physical-side quantities (device counts, wavelengths) --

    @property
    def arm_activation_mrs(self) -> int:
        """Activation MRs physically present on one arm.

        n_a when it respects the bank cap, otherwise n_a spread over arms.
        """
        if self.n_a <= self.mrs_per_bank_max:
            return self.n_a
        return math.ceil(self.n_a / self.n_wg)

    @property
    def arm_weight_mrs(self) -> int:
        return self.arm_activation_mrs

    @property
    def mrs_per_arm(self) -> int:
        return self.arm_activation_mrs + self.arm_weight_mrs + self.n_b

    @property
    def mrs_per_vdp(self) -> int:
        return self.n_wg * self.mrs_per_arm

    @property
    def total_mrs(self) -> int:
        return self.n_vdp * self.mrs_per_vdp

    @property
    def n_lambda(self) -> int:
        """Unique wavelengths after reuse across arms and VDP units."""
        return self.arm_activation_mrs

    def validate(self):
        """Physical feasibility checks (raise PhysicalConstraintError)."""
        comb = self.arm_activation_mrs
        if comb * self.channel_spacing_nm > self.passband_nm:
            raise PhysicalConstraintError(
                f"comb of {comb} channels x {self.channel_spacing_nm} nm "
                f"exceeds the {self.passband_nm} nm broadband passband")
        if comb > self.mrs_per_bank_max:
            raise PhysicalConstraintError(
                f"{comb} MRs per bank exceeds the "
                f"{self.mrs_per_bank_max}-MR bank limit")
        return self


# ---------------------------------------------------------------------------
# dot-product decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DotDecomposition:
    """One output element's dot product split into sub-vector pairs.

    Partial sums are reduced in ascending slice order (fixed for
    determinism): per-slice photodetector sums first, then their total.
    """

    output_index: tuple[int, ...]
    weight_slices: tuple[np.ndarray, ...]
    activation_slices: tuple[np.ndarray, ...]

    def partial_sums(self) -> list[float]:
        return [float(np.dot(w, a)) for w, a in
                zip(self.weight_slices, self.activation_slices)]

    def reconstruct(self) -> float:
        total = 0.0
        for ps in self.partial_sums():
            total += ps
        return total


def _split(vec: np.ndarray, granularity: int) -> tuple[np.ndarray, ...]:
    return tuple(vec[i:i + granularity]
                 for i in range(0, vec.size, granularity))


def decompose_fc(weights, activations, granularity: int) -> list[DotDecomposition]:
    """Split a matrix-vector product into per-row sub-vector dot products."""
    w = np.asarray(weights, dtype=np.float64)
    a = np.asarray(activations, dtype=np.float64)
    if granularity < 1:
        raise DomainError("granularity must be >= 1")
    if w.ndim != 2 or a.ndim != 1 or w.shape[1] != a.size:
        raise DomainError("weights must be [out, in] matching activations")
    out = []
    for row in range(w.shape[0]):
        out.append(DotDecomposition(
            (row,), _split(w[row], granularity), _split(a, granularity)))
    return out


def decompose_conv(kernel, activations, granularity: int,
                   stride: int = 1) -> list[DotDecomposition]:
    """Split a valid-padding convolution into patch dot products.

    ``kernel`` is [kh, kw] or [out_c, in_c, kh, kw]; ``activations`` is the
    matching [h, w] or [in_c, h, w] input. Each output element (oc, oy, ox)
    becomes one decomposed dot product over the flattened patch.
    """
    k = np.asarray(kernel, dtype=np.float64)
    x = np.asarray(activations, dtype=np.float64)
    if granularity < 1:
        raise DomainError("granularity must be >= 1")
    if k.ndim == 2:
        k = k[None, None]
    if x.ndim == 2:
        x = x[None]
    if k.ndim != 4 or x.ndim != 3 or k.shape[1] != x.shape[0]:
        raise DomainError("kernel/activation ranks or channels do not match")
    if k.size == 0:
        raise DomainError("kernel must not be empty")
    oc, ic, kh, kw = k.shape
    _, h, w = x.shape
    oh = (h - kh) // stride + 1
    ow = (w - kw) // stride + 1
    if oh <= 0 or ow <= 0:
        raise DomainError("kernel larger than input")
    out = []
    for c in range(oc):
        kvec = k[c].reshape(-1)
        for oy in range(oh):
            for ox in range(ow):
                patch = x[:, oy * stride:oy * stride + kh,
                          ox * stride:ox * stride + kw].reshape(-1)
                out.append(DotDecomposition(
                    (c, oy, ox), _split(kvec, granularity),
                    _split(patch, granularity)))
    return out


# ---------------------------------------------------------------------------
# work plan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScheduledSlice:
    """One weight sub-vector scheduled on (vdp, arm) at a step."""

    layer_index: int
    output_index: int          # flattened output element (FC row / out chan)
    chunk_index: int           # position of this slice within its vector
    offset: int                # start offset within the flattened vector
    weights: np.ndarray
    vdp_id: int
    arm_id: int
    step_index: int
    c_fold: float = 1.0


@dataclass(frozen=True)
class WorkPlan:
    slices: tuple[ScheduledSlice, ...]
    steps_per_layer: tuple[int, ...]
    cfg: AcceleratorConfig

    @property
    def total_steps(self) -> int:
        return sum(self.steps_per_layer)

    def dump(self) -> str:
        lines = ["layer output chunk vdp arm step len c_fold"]
        for s in self.slices:
            lines.append(f"{s.layer_index} {s.output_index} {s.chunk_index} "
                         f"{s.vdp_id} {s.arm_id} {s.step_index} "
                         f"{s.weights.size} {s.c_fold:.9g}")
        return "\n".join(lines) + "\n"


def _layer_weight_vectors(layer) -> np.ndarray:
    """Per-output-element weight vectors: FC rows or flattened kernels."""
    w = layer.weights
    if layer.kind == LayerKind.FULLY_CONNECTED:
        return w
    return w.reshape(w.shape[0], -1)


def _fold_constants(model: QuantModel) -> dict[int, np.ndarray]:
    """c_fold per weighted-layer index, taken from the following BN layer."""
    folds = {}
    layers = model.layers
    for i, layer in enumerate(layers):
        if layer.kind not in (LayerKind.FULLY_CONNECTED, LayerKind.CONV2D):
            continue
        for nxt in layers[i + 1:]:
            if nxt.kind == LayerKind.BATCH_NORM:
                folds[i] = bn_fold(layer.weights, nxt).c_fold
                break
            if nxt.kind in (LayerKind.FULLY_CONNECTED, LayerKind.CONV2D):
                break
    return folds


def build_work_plan(model: QuantModel, cfg: AcceleratorConfig) -> WorkPlan:
    """Slice every weighted layer and schedule round-robin over the array.

    Slice k of a layer fills slot ``k % (n_vdp * n_wg)`` of step
    ``k // (n_vdp * n_wg)``; slot s is VDP ``s // n_wg``, arm ``s % n_wg``.
    Each weight element appears in exactly one slice; slice length never
    exceeds ``n_a``.
    """
    slots_per_step = cfg.n_vdp * cfg.n_wg
    folds = _fold_constants(model)
    slices: list[ScheduledSlice] = []
    steps: list[int] = []
    for li, layer in enumerate(model.layers):
        if layer.kind not in (LayerKind.FULLY_CONNECTED, LayerKind.CONV2D):
            continue
        vectors = _layer_weight_vectors(layer)
        k = 0
        for out_idx in range(vectors.shape[0]):
            vec = vectors[out_idx]
            c_fold = 1.0
            if li in folds:
                c_fold = float(np.atleast_1d(folds[li])[out_idx])
            for ci, start in enumerate(range(0, vec.size, cfg.n_a)):
                chunk = vec[start:start + cfg.n_a]
                slot = k % slots_per_step
                slices.append(ScheduledSlice(
                    layer_index=li, output_index=out_idx, chunk_index=ci,
                    offset=start, weights=chunk,
                    vdp_id=slot // cfg.n_wg, arm_id=slot % cfg.n_wg,
                    step_index=k // slots_per_step, c_fold=c_fold))
                k += 1
        steps.append(math.ceil(k / slots_per_step) if k else 0)
    return WorkPlan(tuple(slices), tuple(steps), cfg)


# ---------------------------------------------------------------------------
# wavelength reuse
# ---------------------------------------------------------------------------

def build_comb(count: int, spacing_nm: float, center_nm: float,
               passband_nm: float) -> tuple[float, ...]:
    """Wavelength comb centred on ``center_nm``; errors past the passband."""
    if count < 1:
        raise DomainError("comb needs at least one channel")
    if count * spacing_nm > passband_nm:
        raise PhysicalConstraintError(
            f"{count} channels x {spacing_nm} nm exceed the "
            f"{passband_nm} nm passband")
    return tuple(center_nm + (i - (count - 1) / 2.0) * spacing_nm
                 for i in range(count))


def wavelength_assignment(cfg: AcceleratorConfig) -> dict[int, tuple[float, ...]]:
    """Identical comb on every arm (wavelength reuse across arms/VDPs)."""
    comb = build_comb(cfg.arm_activation_mrs, cfg.channel_spacing_nm,
                      cfg.center_wavelength_nm, cfg.passband_nm)
    if cfg.arm_activation_mrs > cfg.mrs_per_bank_max:
        raise PhysicalConstraintError(
            f"{cfg.arm_activation_mrs} MRs per bank exceeds the "
            f"{cfg.mrs_per_bank_max}-MR limit")
    return {arm: comb for arm in range(cfg.n_wg)}


# ---------------------------------------------------------------------------
# structure-only models (design-space workloads)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelStructure:
    """Parameter-count skeleton of a network, enough for pipeline/power math."""

    name: str
    layer_parameter_counts: tuple[int, ...]
    weight_bits: int = 1
    activation_bits: int = 4

    @property
    def parameter_count(self) -> int:
        return int(sum(self.layer_parameter_counts))

    @property
    def total_bits(self) -> int:
        """Bits moved per inference: each MAC operand pair moves weight bits
        plus activation bits."""
        return self.parameter_count * (self.weight_bits + self.activation_bits)

    @classmethod
    def from_model(cls, model: QuantModel, name: str = "model") -> "ModelStructure":
        counts = tuple(l.parameter_count for l in model.weighted_layers())
        return cls(name, counts, weight_bits=1,
                   activation_bits=model.activation_bits)
