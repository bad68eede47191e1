"""Pure-numpy stencil application, semantically identical to the compiled core.

Per-cell accumulation order matches _kernels.pyx: diagonal term first, then
weights in ascending index order, each as a separate multiply and add. This
keeps the two backends bit-identical (the extension is compiled without FMA
contraction).
"""

import numpy as np


def stencil_apply_1d(v, offs, w, diag, out, i0, i1):
    acc = diag * v
    for j in range(len(offs)):
        acc += w[j] * np.roll(v, -int(offs[j]))
    out[i0:i1] = acc[i0:i1]


def stencil_apply_2d(v, offs0, offs1, w, diag, out, r0, r1):
    acc = diag * v
    for j in range(len(offs0)):
        acc += w[j] * np.roll(v, (-int(offs0[j]), -int(offs1[j])), axis=(0, 1))
    out[r0:r1] = acc[r0:r1]
