"""End-to-end behavioral accelerator simulation.

Covers FPV-noisy photonic inference, optical loss and laser power budgets,
pipeline latency, per-device electrical power, energy-per-bit, area, and
memory bandwidth.

Noise model: every imprinted value v in [0, 1] (an activation level or one
rail of a dual-rail binary weight) is perturbed multiplicatively by the
transmission ratio T(lambda_s; lambda') / T(lambda_s; lambda_MR) of the MR it
is imprinted on, where lambda' is the FPV-shifted resonance after tuning
corrects a fraction of the shift. The result is clamped back to [0, 1].
With full tuning the ratio is exactly 1 and the photonic pass reproduces the
reference forward pass. Layers that are not binarized are executed in the
electronic control unit and see no optical noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _kernels, photonics, tuning
from .bnn import LayerKind, QuantModel, quantize_activation
from .errors import DomainError
from .mapping import (AcceleratorConfig, ModelStructure, WorkPlan,
                      build_comb, build_work_plan)
from .photonics import FpvStatistics, MrDesign, RingClass


# ---------------------------------------------------------------------------
# parameter tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LossBudget:
    """Optical loss constants [dB] and detector sensitivity [dBm]."""

    propagation_db_per_cm: float = 1.0
    splitter_db: float = 0.13          # excess loss per 1:2 split stage
    combiner_db: float = 0.9
    mr_through_db: float = 0.02
    mr_modulation_db: float = 0.72
    eo_tuning_db_per_cm: float = 6.0
    to_tuning_db_per_cm: float = 1.0
    broadband_insertion_db: float = 4.71   # 4.35 + 0.36 filter elements
    detector_sensitivity_dbm: float = -20.0
    # intrinsic 1:2 power division charged per split stage when sizing the
    # laser (kept apart from the excess splitter loss above)
    fanout_db_per_stage: float = 10.0 * math.log10(2.0)

    def __post_init__(self):
        for name in ("propagation_db_per_cm", "splitter_db", "combiner_db",
                     "mr_through_db", "mr_modulation_db",
                     "eo_tuning_db_per_cm", "to_tuning_db_per_cm",
                     "broadband_insertion_db"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")


@dataclass(frozen=True)
class DeviceEntry:
    power_mw: float
    latency_ns: float

    def __post_init__(self):
        if self.power_mw < 0 or self.latency_ns < 0:
            raise DomainError("device power/latency must be >= 0")


@dataclass(frozen=True)
class DevicePowerTable:
    """Per-device power and latency (electronic/optoelectronic periphery)."""

    vcsel: DeviceEntry = DeviceEntry(0.66, 10.0)
    tia: DeviceEntry = DeviceEntry(7.2, 0.15)
    photodetector: DeviceEntry = DeviceEntry(2.8, 0.0058)
    dac: DeviceEntry = DeviceEntry(59.7, 0.33)      # 4-bit DAC
    adc: DeviceEntry = DeviceEntry(62.0, 24.0)
    eo_tune_latency_ns: float = 20.0


@dataclass(frozen=True)
class PipelineDelays:
    """ECU-side delays; defaults are one clock at 2.5 GHz each."""

    local_buffer_ns: float = 0.4
    vector_distribution_ns: float = 0.4
    ecu_buffering_ns: float = 0.4
    ecu_buffer_params: int = 100_000
    t_del_ns: float | None = None   # None: one full optical path latency

    def resolve_t_del(self, power: DevicePowerTable) -> float:
        if self.t_del_ns is not None:
            return self.t_del_ns
        return (power.dac.latency_ns + power.eo_tune_latency_ns
                + power.photodetector.latency_ns + power.tia.latency_ns
                + power.vcsel.latency_ns + power.adc.latency_ns)


@dataclass(frozen=True)
class AreaConstants:
    """Non-MR block footprints [mm^2]."""

    vdp_overhead_mm2: float = 0.002
    dac_block_mm2: float = 0.011
    adc_block_mm2: float = 0.00285
    global_overhead_mm2: float = 0.1


@dataclass(frozen=True)
class SimulationEnvironment:
    """Device classes plus all loss/power/tuning/delay tables."""

    designs: dict[RingClass, MrDesign]
    loss: LossBudget
    power: DevicePowerTable
    tuning_params: tuning.TuningParams
    delays: PipelineDelays
    fpv: FpvStatistics
    area: AreaConstants = AreaConstants()


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimReport:
    fps: float
    total_power_mw: float
    power_breakdown_mw: dict[str, float]
    epb_pj_per_bit: float | None
    area_mm2: float
    inference_time_ns: float
    noisy_accuracy: float | None
    required_bandwidth_gb_s: float

    def __post_init__(self):
        total = sum(self.power_breakdown_mw.values())
        if total > 0 and abs(total - self.total_power_mw) > 1e-6 * total:
            raise DomainError("power breakdown does not sum to total")

    def to_dict(self) -> dict:
        return {
            "fps": self.fps,
            "total_power_mw": self.total_power_mw,
            "power_breakdown_mw": dict(self.power_breakdown_mw),
            "epb_pj_per_bit": self.epb_pj_per_bit,
            "area_mm2": self.area_mm2,
            "inference_time_ns": self.inference_time_ns,
            "noisy_accuracy": self.noisy_accuracy,
            "required_bandwidth_gb_s": self.required_bandwidth_gb_s,
        }


@dataclass(frozen=True)
class PipelineTiming:
    total_ns: float
    steps: int                # X of the total-time equation
    buffered_steps: int       # x: steps covered by one ECU buffer fill
    delta_t_ns: float
    t_del_ns: float


@dataclass(frozen=True)
class PathLoss:
    arm_path_db: float
    fanout_db: float

    @property
    def total_db(self) -> float:
        return self.arm_path_db + self.fanout_db


@dataclass(frozen=True)
class LaserPower:
    dbm: float
    mw: float


# ---------------------------------------------------------------------------
# losses and laser
# ---------------------------------------------------------------------------

def path_loss_db(budget: LossBudget, length_cm: float = 0.0,
                 splitters: int = 0, combiners: int = 0,
                 through_mrs: int = 0, modulators: int = 0,
                 tuning_segment_cm: float = 0.0,
                 broadband_mrs: int = 0) -> float:
    """Sum of the component losses along one optical path [dB]."""
    return (budget.propagation_db_per_cm * length_cm
            + budget.splitter_db * splitters
            + budget.combiner_db * combiners
            + budget.mr_through_db * through_mrs
            + budget.mr_modulation_db * modulators
            + (budget.eo_tuning_db_per_cm + budget.to_tuning_db_per_cm)
            * tuning_segment_cm
            + budget.broadband_insertion_db * broadband_mrs)


def loss_accounting(cfg: AcceleratorConfig, env: SimulationEnvironment) -> PathLoss:
    """Worst-case per-arm path loss plus the laser fan-out division.

    The arm path crosses every MR on the arm (through loss), one of them
    modulating, the EO/TO tuned ring segments, the broadband filter, the arm
    combiner, and the waveguide itself; the comb additionally traverses one
    excess-loss splitter per 1:2 fan-out stage. The intrinsic 1:2 power
    division of those stages is reported separately as ``fanout_db``.
    """
    mrs = cfg.mrs_per_arm
    length_cm = mrs * cfg.mr_pitch_um * 1e-4
    stages = math.ceil(math.log2(max(cfg.n_wg * cfg.n_vdp, 1))) if \
        cfg.n_wg * cfg.n_vdp > 1 else 0
    tuned_cm = (cfg.arm_activation_mrs
                * env.designs[RingClass.MULTI_BIT].circumference_nm
                + cfg.arm_weight_mrs
                * env.designs[RingClass.SINGLE_BIT].circumference_nm) * 1e-7
    arm_db = path_loss_db(
        env.loss, length_cm=length_cm, splitters=stages, combiners=1,
        through_mrs=mrs, modulators=1, tuning_segment_cm=tuned_cm,
        broadband_mrs=cfg.n_b)
    return PathLoss(arm_db, stages * env.loss.fanout_db_per_stage)


def laser_power(n_lambda: int, total_loss_db: float,
                sensitivity_dbm: float) -> LaserPower:
    """Laser power at the equality bound of the link budget.

    P_laser [dBm] = sensitivity + total loss + 10*log10(N_lambda)
    """
    if n_lambda < 1:
        raise DomainError("n_lambda must be >= 1")
    dbm = sensitivity_dbm + total_loss_db + 10.0 * math.log10(n_lambda)
    return LaserPower(dbm, 10.0 ** (dbm / 10.0))


# ---------------------------------------------------------------------------
# pipeline timing
# ---------------------------------------------------------------------------

def _param_count(model) -> int:
    return int(model.parameter_count)


def pipeline_time(model, cfg: AcceleratorConfig,
                  env: SimulationEnvironment) -> PipelineTiming:
    """Total inference latency.

    total = T_del + delta_t * X + (ECU buffering delay) * x
    X = ceil(params / (N_w * N_VDP)),   N_w = n_a * n_wg
    x = ceil(min(params, buffered params) / (N_w * N_VDP))
    delta_t = local buffer delay + vector distribution delay
    """
    params = _param_count(model)
    per_step = cfg.weights_per_vdp_step * cfg.n_vdp
    steps = math.ceil(params / per_step) if params else 0
    buffered = min(params, env.delays.ecu_buffer_params)
    buffered_steps = math.ceil(buffered / per_step) if buffered else 0
    delta_t = env.delays.local_buffer_ns + env.delays.vector_distribution_ns
    t_del = env.delays.resolve_t_del(env.power)
    total = (t_del + delta_t * steps
             + env.delays.ecu_buffering_ns * buffered_steps)
    return PipelineTiming(total, steps, buffered_steps, delta_t, t_del)


# ---------------------------------------------------------------------------
# area
# ---------------------------------------------------------------------------

def mr_footprint_um2(radius_um: float, pitch_um: float) -> float:
    """Keep-out disc of one ring: pi * (R + pitch/2)^2."""
    half = radius_um + pitch_um / 2.0
    return math.pi * half * half


def area_from_counts(act_mrs: int, weight_mrs: int, broadband_mrs: int,
                     n_vdp: int, dacs: int, adcs: int,
                     cfg: AcceleratorConfig,
                     env: SimulationEnvironment) -> float:
    pitch = cfg.mr_pitch_um
    um2 = (act_mrs * mr_footprint_um2(
        env.designs[RingClass.MULTI_BIT].radius_um, pitch)
        + weight_mrs * mr_footprint_um2(
            env.designs[RingClass.SINGLE_BIT].radius_um, pitch)
        + broadband_mrs * mr_footprint_um2(
            env.designs[RingClass.BROADBAND].radius_um, pitch))
    return (um2 * 1e-6
            + n_vdp * env.area.vdp_overhead_mm2
            + dacs * env.area.dac_block_mm2
            + adcs * env.area.adc_block_mm2
            + env.area.global_overhead_mm2)


def area_estimate(cfg: AcceleratorConfig, env: SimulationEnvironment) -> float:
    """Chip area [mm^2] from MR keep-out discs plus block constants."""
    arms = cfg.n_vdp * cfg.n_wg
    return area_from_counts(
        act_mrs=arms * cfg.arm_activation_mrs,
        weight_mrs=arms * cfg.arm_weight_mrs,
        broadband_mrs=arms * cfg.n_b,
        n_vdp=cfg.n_vdp, dacs=cfg.n_vdp * cfg.dacs_per_vdp,
        adcs=cfg.n_vdp, cfg=cfg, env=env)


# ---------------------------------------------------------------------------
# FPV chip maps and tuning power
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChipFpvMap:
    """Per-MR resonance shifts for one chip instance [nm].

    Arrays are indexed by flat MR id: (vdp * n_wg + arm) * slots + slot.
    Weight rails carry independent MR populations.
    """

    act_delta_nm: np.ndarray
    weight_pos_delta_nm: np.ndarray
    weight_neg_delta_nm: np.ndarray
    broadband_delta_nm: np.ndarray


def chip_fpv_map(cfg: AcceleratorConfig, env: SimulationEnvironment,
                 seed: int) -> ChipFpvMap:
    """Sample one FPV map for every MR of the configured array."""
    arms = cfg.n_vdp * cfg.n_wg
    mb = env.designs[RingClass.MULTI_BIT]
    sb = env.designs[RingClass.SINGLE_BIT]
    bb = env.designs[RingClass.BROADBAND]
    n_act = arms * cfg.arm_activation_mrs
    n_w = arms * cfg.arm_weight_mrs

    def draw(design, count, sub_seed):
        fmap = photonics.sample_fpv_map([design], env.fpv, count,
                                        seed=sub_seed)
        return fmap.delta_lambdas_nm

    return ChipFpvMap(
        act_delta_nm=draw(mb, n_act, seed * 4 + 0),
        weight_pos_delta_nm=draw(sb, n_w, seed * 4 + 1),
        weight_neg_delta_nm=draw(sb, n_w, seed * 4 + 2),
        broadband_delta_nm=draw(bb, arms * cfg.n_b, seed * 4 + 3))


def tuning_power_budget(cfg: AcceleratorConfig, env: SimulationEnvironment,
                        chip_map: ChipFpvMap,
                        tuning_fraction: float) -> tuple[float, float]:
    """(eo_mw, to_mw) to correct ``tuning_fraction`` of every MR's shift.

    EO corrections are summed per MR; TO remainders are solved collectively
    (TED) bank by bank. All banks share one layout spacing, so a single
    factorized crosstalk matrix per bank size is reused.
    """
    params = env.tuning_params
    eo_total = 0.0
    to_total = 0.0
    populations = [
        (chip_map.act_delta_nm, cfg.arm_activation_mrs,
         _params_for(env, RingClass.MULTI_BIT)),
        (chip_map.weight_pos_delta_nm, cfg.arm_weight_mrs,
         _params_for(env, RingClass.SINGLE_BIT)),
        (chip_map.weight_neg_delta_nm, cfg.arm_weight_mrs,
         _params_for(env, RingClass.SINGLE_BIT)),
        (chip_map.broadband_delta_nm, cfg.n_b,
         _params_for(env, RingClass.BROADBAND)),
    ]
    for deltas, bank_size, p in populations:
        if deltas.size == 0:
            continue
        folded = np.abs(deltas) % p.fsr_nm
        folded = np.minimum(folded, p.fsr_nm - folded)
        corrected = tuning_fraction * folded
        eo = np.minimum(corrected, p.eo_max_shift_nm)
        to = corrected - eo
        eo_total += float(np.sum(eo)) * p.eo_power_uw_per_nm * 1e-3
        if not np.any(to > 0):
            continue
        banks = to.reshape(-1, bank_size)
        k = tuning.thermal_crosstalk_matrix(
            tuning.uniform_positions_um(bank_size, cfg.mr_pitch_um),
            p.crosstalk_eta, p.crosstalk_decay_um)
        s = np.linalg.solve(k, banks.T)
        to_total += float(np.sum(np.abs(s))) / p.heater_efficiency_nm_per_mw
    return eo_total, to_total


def _params_for(env: SimulationEnvironment,
                ring_class: RingClass) -> tuning.TuningParams:
    design = env.designs[ring_class]
    return replace(env.tuning_params, fsr_nm=design.fsr_nm,
                   heater_efficiency_nm_per_mw=None)


# ---------------------------------------------------------------------------
# noisy photonic inference
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhotonicMapping:
    """Per-layer MR index matrices derived from the work plan.

    For each weighted layer an [out, in] integer matrix holds the flat MR id
    that carries each weight/activation element; -1 marks padding (elements
    beyond the row length).
    """

    plan: WorkPlan
    layer_indices: tuple[int, ...]
    mr_index: dict[int, np.ndarray]
    c_fold: dict[int, np.ndarray]
    comb: tuple[float, ...]


def build_photonic_mapping(model: QuantModel,
                           cfg: AcceleratorConfig) -> PhotonicMapping:
    cfg.validate()
    plan = build_work_plan(model, cfg)
    slots = cfg.arm_activation_mrs
    comb = build_comb(slots, cfg.channel_spacing_nm,
                      cfg.center_wavelength_nm, cfg.passband_nm)
    shapes = {}
    for li, layer in enumerate(model.layers):
        if layer.kind == LayerKind.FULLY_CONNECTED:
            shapes[li] = layer.weights.shape
        elif layer.kind == LayerKind.CONV2D:
            w = layer.weights
            shapes[li] = (w.shape[0], int(np.prod(w.shape[1:])))
    mr_index = {li: np.full(shape, -1, dtype=np.int64)
                for li, shape in shapes.items()}
    c_fold = {li: np.ones(shape[0]) for li, shape in shapes.items()}
    for s in plan.slices:
        idx = mr_index[s.layer_index]
        flat_arm = s.vdp_id * cfg.n_wg + s.arm_id
        ks = np.arange(s.weights.size)
        idx[s.output_index, s.offset + ks] = flat_arm * slots + (ks % slots)
        c_fold[s.layer_index][s.output_index] = s.c_fold
    layer_ids = tuple(sorted(shapes))
    return PhotonicMapping(plan, layer_ids, mr_index, c_fold, comb)


def _perturbation_ratios(design: MrDesign, comb: Sequence[float],
                         deltas_nm: np.ndarray, slots: int,
                         residual: float) -> np.ndarray:
    """rho = T(lambda_s; lambda_s + residual*delta) / T(lambda_s; lambda_s)."""
    lam = np.asarray(comb)[np.arange(deltas_nm.size) % slots]
    base = photonics.transmission(design, lam, lam)
    shifted = photonics.transmission(design, lam, lam + residual * deltas_nm)
    return np.asarray(shifted) / np.asarray(base)


@dataclass(frozen=True)
class NoisyInferenceResult:
    accuracy: float
    logits: np.ndarray
    predictions: np.ndarray


def noisy_inference(model: QuantModel, x, y, cfg: AcceleratorConfig,
                    env: SimulationEnvironment, tuning_fraction: float,
                    seed: int,
                    mapping: PhotonicMapping | None = None,
                    chip_map: ChipFpvMap | None = None) -> NoisyInferenceResult:
    """Forward pass through the FPV-perturbed photonic array.

    Binarized layers run optically: activations and dual-rail weight
    occupancies are scaled by their MR's transmission ratio and clamped to
    [0, 1]; per-arm partial sums are scaled by the broadband C_fold gain.
    Non-binarized layers, nonlinearities, quantization and pooling run
    exactly in the ECU. ``tuning_fraction`` = 1 reproduces the reference
    forward pass (ratios are identically 1).
    """
    if not (0.0 <= tuning_fraction <= 1.0):
        raise DomainError("tuning_fraction must be in [0, 1]")
    if mapping is None:
        mapping = build_photonic_mapping(model, cfg)
    if chip_map is None:
        chip_map = chip_fpv_map(cfg, env, seed)
    residual = 1.0 - tuning_fraction
    slots = cfg.arm_activation_mrs
    mb = env.designs[RingClass.MULTI_BIT]
    sb = env.designs[RingClass.SINGLE_BIT]
    rho_act = _perturbation_ratios(mb, mapping.comb, chip_map.act_delta_nm,
                                   slots, residual)
    rho_wp = _perturbation_ratios(sb, mapping.comb,
                                  chip_map.weight_pos_delta_nm, slots,
                                  residual)
    rho_wn = _perturbation_ratios(sb, mapping.comb,
                                  chip_map.weight_neg_delta_nm, slots,
                                  residual)

    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    pending_fold = None

    def flush_fold(val):
        nonlocal pending_fold
        if pending_fold is not None:
            val = _scale_channels(val, pending_fold)
            pending_fold = None
        return val

    for li, layer in enumerate(model.layers):
        if layer.kind == LayerKind.FULLY_CONNECTED:
            a = flush_fold(a)
            if a.ndim > 2:
                a = a.reshape(a.shape[0], -1)
            if layer.binarized:
                a = _noisy_fc(a, layer, mapping, li, rho_act, rho_wp, rho_wn)
            else:
                a = a @ layer.effective_weights().T
            pending_fold = mapping.c_fold[li]
        elif layer.kind == LayerKind.CONV2D:
            a = flush_fold(a)
            if layer.binarized:
                a = _noisy_conv(a, layer, mapping, li, rho_act, rho_wp,
                                rho_wn)
            else:
                from .bnn import im2col
                k = layer.effective_weights()
                cols, oh, ow = im2col(a, k.shape[2], k.shape[3], layer.stride)
                out = cols @ k.reshape(k.shape[0], -1).T
                a = out.transpose(0, 2, 1).reshape(a.shape[0], k.shape[0],
                                                   oh, ow)
            pending_fold = mapping.c_fold[li]
        elif layer.kind == LayerKind.BATCH_NORM:
            # The photonic path always folds; C_fold rides on the plan and
            # is applied after the next nonlinearity.
            continue
        elif layer.kind == LayerKind.ACTIVATION:
            if layer.activation == "relu":
                a = np.maximum(a, 0.0)
            a = flush_fold(a)
            if layer.quantize:
                a = quantize_activation(a, model.activation_bits,
                                        *layer.act_range)
        elif layer.kind == LayerKind.POOL:
            from .bnn import _apply_pool
            a = flush_fold(a)
            a = _apply_pool(a, layer.pool_window, layer.pool_mode)
    a = flush_fold(a)
    logits = a.reshape(a.shape[0], -1)
    predictions = np.argmax(logits, axis=1)
    acc = float(np.mean(predictions == np.asarray(y))) if y is not None \
        else float("nan")
    return NoisyInferenceResult(acc, logits, predictions)


def _scale_channels(a: np.ndarray, scale: np.ndarray) -> np.ndarray:
    if a.ndim == 4:
        return a * scale[None, :, None, None]
    return a * scale[None, :]


def _gather_ratios(mapping: PhotonicMapping, li: int, rho_act, rho_wp,
                   rho_wn):
    idx = mapping.mr_index[li]
    safe = np.maximum(idx, 0)
    ra = rho_act[safe]
    rp = rho_wp[safe]
    rn = rho_wn[safe]
    mask = idx < 0
    ra[mask] = 1.0
    rp[mask] = 1.0
    rn[mask] = 1.0
    return ra, rp, rn


def _rails(weights_eff: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return (weights_eff > 0).astype(np.float64), \
           (weights_eff < 0).astype(np.float64)


def _noisy_fc(a, layer, mapping, li, rho_act, rho_wp, rho_wn):
    w_eff = layer.effective_weights()
    wp, wn = _rails(w_eff)
    ra, rp, rn = _gather_ratios(mapping, li, rho_act, rho_wp, rho_wn)
    return _kernels.noisy_fc_forward(a, wp, wn, ra, rp, rn)


def _noisy_conv(a, layer, mapping, li, rho_act, rho_wp, rho_wn):
    from .bnn import im2col
    k = layer.effective_weights()
    oc, ic, kh, kw = k.shape
    cols, oh, ow = im2col(a, kh, kw, layer.stride)
    n, pos, depth = cols.shape
    wp, wn = _rails(k.reshape(oc, -1))
    ra, rp, rn = _gather_ratios(mapping, li, rho_act, rho_wp, rho_wn)
    flat = _kernels.noisy_fc_forward(cols.reshape(n * pos, depth), wp, wn,
                                     ra, rp, rn)
    return flat.reshape(n, pos, oc).transpose(0, 2, 1).reshape(n, oc, oh, ow)


def fpv_accuracy_sweep(model: QuantModel, x, y, cfg: AcceleratorConfig,
                       env: SimulationEnvironment,
                       fractions: Sequence[float], n_maps: int,
                       base_seed: int) -> list[tuple[float, float, float]]:
    """(fraction, mean accuracy, std accuracy) over seeded FPV maps."""
    mapping = build_photonic_mapping(model, cfg)
    maps = [chip_fpv_map(cfg, env, base_seed + i) for i in range(n_maps)]
    rows = []
    for f in fractions:
        accs = [noisy_inference(model, x, y, cfg, env, f, 0,
                                mapping=mapping, chip_map=m).accuracy
                for m in maps]
        rows.append((float(f), float(np.mean(accs)), float(np.std(accs))))
    return rows


# ---------------------------------------------------------------------------
# power / EPB aggregation
# ---------------------------------------------------------------------------

def required_bandwidth_gb_s(cfg: AcceleratorConfig,
                            env: SimulationEnvironment,
                            activation_bits: int = 4) -> float:
    """Steady-state ECU-to-core interface bandwidth.

    The interface is DAC-array bound: every optical evaluate window (the
    full path latency T_del, enabled by ping-pong buffering) the ECU streams
    one fresh activation word per DAC; binary weights ride on switch
    settings loaded alongside and are not charged.
    """
    t_del = env.delays.resolve_t_del(env.power)
    bits_per_window = cfg.dacs_per_vdp * cfg.n_vdp * activation_bits
    return bits_per_window / t_del / 8.0   # bits/ns -> GB/s


def power_and_epb(model, cfg: AcceleratorConfig, env: SimulationEnvironment,
                  tuning_fraction: float = 0.8, seed: int = 0,
                  noisy_accuracy: float | None = None,
                  chip_map: ChipFpvMap | None = None) -> SimReport:
    """Full power/performance report for a model on a configuration.

    ``model`` may be a QuantModel or a ModelStructure; only parameter counts
    and bit widths are needed.
    """
    cfg.validate()
    if isinstance(model, QuantModel):
        structure = ModelStructure.from_model(model)
    else:
        structure = model
    timing = pipeline_time(structure, cfg, env)
    loss = loss_accounting(cfg, env)
    laser = laser_power(cfg.n_lambda, loss.total_db,
                        env.loss.detector_sensitivity_dbm)
    if chip_map is None:
        chip_map = chip_fpv_map(cfg, env, seed)
    eo_mw, to_mw = tuning_power_budget(cfg, env, chip_map, tuning_fraction)
    arms = cfg.n_vdp * cfg.n_wg
    p = env.power
    breakdown = {
        "laser": laser.mw,
        "to_tuning": to_mw,
        "eo_tuning": eo_mw,
        "dac": cfg.dacs_per_vdp * cfg.n_vdp * p.dac.power_mw,
        "adc": cfg.n_vdp * p.adc.power_mw,
        "pd": (cfg.n_wg + 1) * cfg.n_vdp * p.photodetector.power_mw,
        "tia": (cfg.n_wg + 1) * cfg.n_vdp * p.tia.power_mw,
        "vcsel": arms * p.vcsel.power_mw,
    }
    total = sum(breakdown.values())
    bits = structure.total_bits
    epb = total * timing.total_ns / bits if bits else None
    fps = 1e9 / timing.total_ns
    return SimReport(
        fps=fps, total_power_mw=total, power_breakdown_mw=breakdown,
        epb_pj_per_bit=epb, area_mm2=area_estimate(cfg, env),
        inference_time_ns=timing.total_ns, noisy_accuracy=noisy_accuracy,
        required_bandwidth_gb_s=required_bandwidth_gb_s(
            cfg, env, structure.activation_bits))
