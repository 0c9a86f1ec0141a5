"""Hot numeric kernels, JIT-compiled with numba when available.

The same operations exist in two flavours:

* ``*_numpy`` -- vectorized pure-numpy implementations (always available),
* numba ``@njit`` loop implementations compiled at import time.

Backend selection is driven by the ``MRBNN_BACKEND`` environment variable:
``numba`` (default) uses the JIT kernels, ``numpy`` forces the fallback.
If numba cannot be imported the fallback is selected silently.

All kernels are deterministic: no fastmath, no parallel reductions, fixed
accumulation order inside the loop versions.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "USING_NUMBA",
    "all_pass_transmission",
    "all_pass_transmission_numpy",
    "channel_noise_powers",
    "channel_noise_powers_numpy",
    "noisy_fc_forward",
    "noisy_fc_forward_numpy",
]


# ---------------------------------------------------------------------------
# pure-numpy implementations (reference semantics for both backends)
# ---------------------------------------------------------------------------

def all_pass_transmission_numpy(cos_phi, r, a):
    """Through-port power transmission of an all-pass ring.

    T = (a^2 - 2*r*a*cos(phi) + r^2) / (1 - 2*r*a*cos(phi) + (r*a)^2)

    ``cos_phi`` may be a scalar or ndarray; ``r`` and ``a`` broadcast.
    """
    arr = np.asarray(cos_phi, dtype=np.float64)
    ra = r * a
    num = a * a - 2.0 * ra * arr + r * r
    den = 1.0 - 2.0 * ra * arr + ra * ra
    out = num / den
    return out if arr.ndim else float(out)


def channel_noise_powers_numpy(lambdas_nm, q_factor, input_powers):
    """Per-channel inter-channel crosstalk noise power.

    noise[i] = sum_{j != i} phi(i, j) * P_in[j]
    phi(i, j) = delta_i^2 / ((lambda_i - lambda_j)^2 + delta_i^2)
    delta_i   = lambda_i / (2 Q)
    """
    lam = np.asarray(lambdas_nm, dtype=np.float64)
    p = np.asarray(input_powers, dtype=np.float64)
    delta2 = (lam / (2.0 * q_factor)) ** 2
    det2 = (lam[:, None] - lam[None, :]) ** 2
    phi = delta2[:, None] / (det2 + delta2[:, None])
    np.fill_diagonal(phi, 0.0)
    return phi @ p


def noisy_fc_forward_numpy(acts, w_pos, w_neg, rho_act, rho_wp, rho_wn):
    """FPV-perturbed fully connected forward pass (dual-rail weights).

    acts:             [n_samples, n_in] imprinted activation values in [0, 1]
    w_pos / w_neg:    [n_out, n_in] rail occupancies in {0, 1}
    rho_act/wp/wn:    [n_out, n_in] per-MR transmission perturbation ratios

    out[s, o] = sum_k clip(acts[s,k] * rho_act[o,k])
                      * (clip(w_pos[o,k] * rho_wp[o,k])
                         - clip(w_neg[o,k] * rho_wn[o,k]))

    where clip(.) clamps to [0, 1].
    """
    a_eff = np.clip(acts[:, None, :] * rho_act[None, :, :], 0.0, 1.0)
    rail = (np.clip(w_pos * rho_wp, 0.0, 1.0)
            - np.clip(w_neg * rho_wn, 0.0, 1.0))
    return np.sum(a_eff * rail[None, :, :], axis=2)


# ---------------------------------------------------------------------------
# numba loop kernels
# ---------------------------------------------------------------------------

_env = os.environ.get("MRBNN_BACKEND", "numba").strip().lower()
USING_NUMBA = False

if _env not in ("numpy",):
    try:
        from numba import njit

        @njit(cache=True)
        def _all_pass_nb(cos_phi, r, a):
            out = np.empty_like(cos_phi)
            ra = r * a
            for i in range(cos_phi.size):
                c = cos_phi.flat[i]
                out.flat[i] = (a * a - 2.0 * ra * c + r * r) / \
                              (1.0 - 2.0 * ra * c + ra * ra)
            return out

        @njit(cache=True)
        def _channel_noise_nb(lam, q_factor, p):
            n = lam.size
            out = np.zeros(n)
            for i in range(n):
                d2 = (lam[i] / (2.0 * q_factor)) ** 2
                acc = 0.0
                for j in range(n):
                    if j != i:
                        det = lam[i] - lam[j]
                        acc += d2 / (det * det + d2) * p[j]
                out[i] = acc
            return out

        @njit(cache=True)
        def _noisy_fc_nb(acts, w_pos, w_neg, rho_act, rho_wp, rho_wn):
            n_s, n_in = acts.shape
            n_out = w_pos.shape[0]
            out = np.zeros((n_s, n_out))
            rail = np.empty((n_out, n_in))
            for o in range(n_out):
                for k in range(n_in):
                    wp = w_pos[o, k] * rho_wp[o, k]
                    wn = w_neg[o, k] * rho_wn[o, k]
                    wp = min(max(wp, 0.0), 1.0)
                    wn = min(max(wn, 0.0), 1.0)
                    rail[o, k] = wp - wn
            for s in range(n_s):
                for o in range(n_out):
                    acc = 0.0
                    for k in range(n_in):
                        ae = acts[s, k] * rho_act[o, k]
                        ae = min(max(ae, 0.0), 1.0)
                        acc += ae * rail[o, k]
                    out[s, o] = acc
            return out

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False

BACKEND = "numba" if USING_NUMBA else "numpy"


def _as_c(x):
    return np.ascontiguousarray(x, dtype=np.float64)


if USING_NUMBA:

    def all_pass_transmission(cos_phi, r, a):
        arr = np.asarray(cos_phi, dtype=np.float64)
        if arr.ndim == 0:
            c = float(arr)
            ra = r * a
            return (a * a - 2.0 * ra * c + r * r) / \
                   (1.0 - 2.0 * ra * c + ra * ra)
        return _all_pass_nb(np.ascontiguousarray(arr), float(r), float(a))

    def channel_noise_powers(lambdas_nm, q_factor, input_powers):
        return _channel_noise_nb(_as_c(lambdas_nm), float(q_factor),
                                 _as_c(input_powers))

    def noisy_fc_forward(acts, w_pos, w_neg, rho_act, rho_wp, rho_wn):
        return _noisy_fc_nb(_as_c(acts), _as_c(w_pos), _as_c(w_neg),
                            _as_c(rho_act), _as_c(rho_wp), _as_c(rho_wn))

else:
    all_pass_transmission = all_pass_transmission_numpy
    channel_noise_powers = channel_noise_powers_numpy
    noisy_fc_forward = noisy_fc_forward_numpy
