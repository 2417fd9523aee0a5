"""
Alignment and fusion kernels
============================

Two feature grids from different sensors are aligned with an affine warp,
refined with deformable sampling, and fused channel by channel with attention
weights computed from pooled statistics. All operations are linear in the
features, which the last lines check numerically.
"""

import numpy as np

from uavmot.fusion_kernels import (AffineMatrix, AttentionProjection, FeatureGrid, adfm_forward, affine_warp,
                                   compose_affine, deformable_sample, kernel_taps)

rng = np.random.default_rng(0)
rgb = FeatureGrid(rng.normal(size=(4, 8, 8)))
ir = FeatureGrid(rng.normal(size=(4, 8, 8)))

# Coarse alignment: a predicted correction on top of the identity.
delta = AffineMatrix(rng.normal(scale=0.05, size=(2, 3)))
m = compose_affine(AffineMatrix.identity(), delta)
ir_warped = affine_warp(ir, m)
print("affine\n", np.round(m.m, 3))

# Fine alignment: one 3x3 deformable kernel with small learned offsets.
taps = kernel_taps(3)
offsets = rng.normal(scale=0.3, size=(9, 8, 8, 2))
ir_aligned = deformable_sample(ir_warped, offsets, taps)

# Fusion: channel weights from pooled statistics of both grids.
C, R = 4, 2
proj = AttentionProjection(rng.normal(size=(R, 2 * C)), np.zeros(R), rng.normal(size=(C, R)), np.zeros(C),
                           rng.normal(size=(C, R)), np.zeros(C))
fused = adfm_forward(rgb, ir_aligned, proj)
print("fused grid", fused.values.shape, "mean", round(float(fused.values.mean()), 4))

# Linearity of the warp in the features.
a = 2.5
lhs = affine_warp(FeatureGrid(a * rgb.values + ir.values), m).values
rhs = a * affine_warp(rgb, m).values + affine_warp(ir, m).values
print("warp linearity error", float(np.abs(lhs - rhs).max()))
