"""Per-time-step LSTM kernels compiled with numba (float32 and float64).

Matrix products and tanh stay in numpy (BLAS / SIMD); these loops replace the
chains of small elementwise calls around them that otherwise dominate a step.
Sigmoid gates use sigmoid(z) = (1 + tanh(z / 2)) / 2.
"""
import numba


@numba.njit(cache=True)
def gate_prepare(a, xw_t, H):
    """``a += xw_t``, then halve the three sigmoid gates so one tanh pass serves all four."""
    B = a.shape[0]
    for r in range(B):
        for k in range(4 * H):
            v = a[r, k] + xw_t[r, k]
            a[r, k] = 0.5 * v if k < 3 * H else v


@numba.njit(cache=True)
def gate_finish(a, c_prev, c_out, H):
    """Turn tanh(z/2) into sigmoid(z) for gates i, f, o and write the new cell state."""
    B = a.shape[0]
    for r in range(B):
        for k in range(H):
            i = 0.5 * a[r, k] + 0.5
            f = 0.5 * a[r, H + k] + 0.5
            a[r, k] = i
            a[r, H + k] = f
            a[r, 2 * H + k] = 0.5 * a[r, 2 * H + k] + 0.5
            c_out[r, k] = f * c_prev[r, k] + i * a[r, 3 * H + k]


@numba.njit(cache=True)
def lstm_step_bwd(dh, dc, acts, c_prev, tc, da):
    """Gate pre-activation gradients into ``da``; ``dc`` is updated in place to dL/dc_prev."""
    B = dh.shape[0]
    H = dh.shape[1]
    for r in range(B):
        for k in range(H):
            i = acts[r, k]
            f = acts[r, H + k]
            o = acts[r, 2 * H + k]
            g = acts[r, 3 * H + k]
            t = tc[r, k]
            d_h = dh[r, k]
            d_c = dc[r, k] + d_h * o * (1.0 - t * t)
            da[r, k] = d_c * g * i * (1.0 - i)
            da[r, H + k] = d_c * c_prev[r, k] * f * (1.0 - f)
            da[r, 2 * H + k] = d_h * t * o * (1.0 - o)
            da[r, 3 * H + k] = d_c * i * (1.0 - g * g)
            dc[r, k] = d_c * f
