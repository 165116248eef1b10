# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled forward kernels.

Mirrors kernels.pycore exactly: float32 tensors, float64 accumulation,
cross-correlation with zero padding.  Convolution gathers an im2col patch
matrix and runs a plain C dot-product loop over it; everything heavy runs
with the GIL released so evaluation threads overlap on multi-core hosts.
"""

import numpy as np

cimport cython
cimport numpy as cnp

from ..errors import ShapeError

cnp.import_array()

NAME = "native"


cdef void _fill_cols(
    const float[:, :, :, ::1] x,
    double[:, ::1] cols,
    Py_ssize_t oh,
    Py_ssize_t ow,
    Py_ssize_t kh,
    Py_ssize_t kw,
    Py_ssize_t stride,
    Py_ssize_t padding,
) noexcept nogil:
    # cols[(i*oh + q)*ow + j, (ci*kh + u)*kw + v] = padded x at the window,
    # zero where the window falls outside the image.
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t i, q, j, ci, u, v, row, col, ih, iw
    cdef double val
    for i in range(n):
        for q in range(oh):
            for j in range(ow):
                row = (i * oh + q) * ow + j
                for ci in range(c):
                    for u in range(kh):
                        ih = q * stride + u - padding
                        for v in range(kw):
                            iw = j * stride + v - padding
                            col = (ci * kh + u) * kw + v
                            if 0 <= ih < h and 0 <= iw < w:
                                val = x[i, ci, ih, iw]
                            else:
                                val = 0.0
                            cols[row, col] = val


cdef void _cols_gemm(
    const double[:, ::1] cols,
    const double[:, ::1] weight,
    const float[::1] biases,
    float[:, :, :, ::1] out,
) noexcept nogil:
    cdef Py_ssize_t n = out.shape[0], o = out.shape[1]
    cdef Py_ssize_t oh = out.shape[2], ow = out.shape[3]
    cdef Py_ssize_t k = cols.shape[1]
    cdef Py_ssize_t i, p, q, j, row, t
    cdef double acc
    cdef const double* crow
    cdef const double* wrow
    for i in range(n):
        for q in range(oh):
            for j in range(ow):
                row = (i * oh + q) * ow + j
                crow = &cols[row, 0]
                for p in range(o):
                    wrow = &weight[p, 0]
                    acc = biases[p]
                    for t in range(k):
                        acc += crow[t] * wrow[t]
                    out[i, p, q, j] = <float> acc


def conv2d(x, kernels, biases, stride, padding):
    """Batched 2-D cross-correlation: [N,C,H,W] -> [N,O,OH,OW]."""
    x = np.ascontiguousarray(x, dtype=np.float32)
    kernels = np.ascontiguousarray(kernels, dtype=np.float32)
    biases = np.ascontiguousarray(biases, dtype=np.float32)
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t o = kernels.shape[0], ck = kernels.shape[1]
    cdef Py_ssize_t kh = kernels.shape[2], kw = kernels.shape[3]
    if ck != c:
        raise ShapeError(f"conv2d: input has {c} channels but kernels expect {ck}")
    cdef Py_ssize_t st = stride, pad = padding
    cdef Py_ssize_t oh = (h + 2 * pad - kh) // st + 1
    cdef Py_ssize_t ow = (w + 2 * pad - kw) // st + 1
    if oh < 1 or ow < 1:
        raise ShapeError(
            f"conv2d: output spatial size {oh}x{ow} is empty for input "
            f"{h}x{w}, kernel {kh}x{kw}, stride {stride}, padding {padding}"
        )

    cols_arr = np.empty((n * oh * ow, c * kh * kw), dtype=np.float64)
    weight_arr = kernels.reshape(o, c * kh * kw).astype(np.float64)
    out_arr = np.empty((n, o, oh, ow), dtype=np.float32)

    cdef const float[:, :, :, ::1] xv = x
    cdef double[:, ::1] cols = cols_arr
    cdef const double[:, ::1] weight = weight_arr
    cdef const float[::1] bv = biases
    cdef float[:, :, :, ::1] outv = out_arr
    with nogil:
        _fill_cols(xv, cols, oh, ow, kh, kw, st, pad)
        _cols_gemm(cols, weight, bv, outv)
    return out_arr


cdef void _linear_core(
    const double[:, ::1] x,
    const double[:, ::1] weight,
    const float[::1] biases,
    float[:, ::1] out,
) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], fin = x.shape[1], fout = weight.shape[0]
    cdef Py_ssize_t i, p, t
    cdef double acc
    cdef const double* xrow
    cdef const double* wrow
    for i in range(n):
        xrow = &x[i, 0]
        for p in range(fout):
            wrow = &weight[p, 0]
            acc = biases[p]
            for t in range(fin):
                acc += xrow[t] * wrow[t]
            out[i, p] = <float> acc


def linear(x, weights, biases):
    """Batched affine map: [N,IN] @ [OUT,IN]^T + [OUT] -> [N,OUT]."""
    x = np.ascontiguousarray(x, dtype=np.float32)
    weights = np.ascontiguousarray(weights, dtype=np.float32)
    biases = np.ascontiguousarray(biases, dtype=np.float32)
    cdef Py_ssize_t n = x.shape[0], fin = x.shape[1]
    cdef Py_ssize_t fout = weights.shape[0], fin_w = weights.shape[1]
    if fin_w != fin:
        raise ShapeError(f"linear: input has {fin} features but weights expect {fin_w}")

    x64 = x.astype(np.float64)
    w64 = weights.astype(np.float64)
    out_arr = np.empty((n, fout), dtype=np.float32)

    cdef const double[:, ::1] xv = x64
    cdef const double[:, ::1] wv = w64
    cdef const float[::1] bv = biases
    cdef float[:, ::1] outv = out_arr
    with nogil:
        _linear_core(xv, wv, bv, outv)
    return out_arr
