"""NumPy fallback implementations of the hot forward kernels.

Same contract as the compiled backend (`_native`): float32 tensors in and
out, float64 accumulation inside every convolution/affine inner sum.  The
convolution is cross-correlation (no kernel flip) with zero padding, done
as an im2col gather followed by one float64 GEMM.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import ShapeError

NAME = "python"


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    """Spatial output extent: floor((size + 2*padding - kernel)/stride) + 1."""
    return (size + 2 * padding - kernel) // stride + 1


def conv2d(
    x: np.ndarray,
    kernels: np.ndarray,
    biases: np.ndarray,
    stride: int,
    padding: int,
) -> np.ndarray:
    """Batched 2-D cross-correlation: [N,C,H,W] -> [N,O,OH,OW]."""
    n, c, h, w = x.shape
    o, ck, kh, kw = kernels.shape
    if ck != c:
        raise ShapeError(
            f"conv2d: input has {c} channels but kernels expect {ck}"
        )
    oh = conv_output_size(h, kh, stride, padding)
    ow = conv_output_size(w, kw, stride, padding)
    if oh < 1 or ow < 1:
        raise ShapeError(
            f"conv2d: output spatial size {oh}x{ow} is empty for input "
            f"{h}x{w}, kernel {kh}x{kw}, stride {stride}, padding {padding}"
        )

    padded = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=np.float64)
    padded[:, :, padding : padding + h, padding : padding + w] = x

    sn, sc, sh, sw = padded.strides
    windows = as_strided(
        padded,
        shape=(n, oh, ow, c, kh, kw),
        strides=(sn, sh * stride, sw * stride, sc, sh, sw),
    )
    cols = windows.reshape(n * oh * ow, c * kh * kw)
    weight = kernels.reshape(o, c * kh * kw).astype(np.float64)
    out = cols @ weight.T + biases.astype(np.float64)
    return np.ascontiguousarray(
        out.reshape(n, oh, ow, o).transpose(0, 3, 1, 2).astype(np.float32)
    )


def linear(x: np.ndarray, weights: np.ndarray, biases: np.ndarray) -> np.ndarray:
    """Batched affine map: [N,IN] @ [OUT,IN]^T + [OUT] -> [N,OUT]."""
    n, fin = x.shape
    fout, fin_w = weights.shape
    if fin_w != fin:
        raise ShapeError(
            f"linear: input has {fin} features but weights expect {fin_w}"
        )
    out = x.astype(np.float64) @ weights.astype(np.float64).T + biases.astype(
        np.float64
    )
    return out.astype(np.float32)
