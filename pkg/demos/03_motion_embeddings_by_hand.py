"""
Motion embeddings from an event frame
=====================================

A target box is grown by 20 px and the non-zero event pixels inside that crop
are summarized by seven numbers: the count, the normalized mean and spread in
x and y, and the normalized extent. Two embeddings are compared by cosine
distance, which ignores overall scale, and gated so that weak agreement counts
as no agreement.
"""

import numpy as np

from uavmot.core import BBox, EventFrame
from uavmot.motion import crop_expand, gated_motion_distance, motion_distance, motion_embedding

W, H = 346, 260
box = BBox(30, 30, 10, 10)
print("crop", crop_expand(box, W, H))

# Two pixels of opposite polarity: only whether a pixel fired matters.
frame = EventFrame(W, H, xs=np.array([20, 50]), ys=np.array([20, 50]), vs=np.array([2, -3]))
e = motion_embedding(frame, box)
print("embedding", np.round(e.to_array(), 4))

# The pixel count is not normalized, so it dominates the cosine: crops look
# alike whatever their shape, and even a large change in count moves the
# distance only modestly.
streak = EventFrame(W, H, xs=np.arange(20, 50), ys=np.full(30, 35), vs=np.ones(30, dtype=int))
blob = EventFrame(W, H, xs=np.array([34, 35, 36, 35]), ys=np.array([35, 34, 35, 36]), vs=np.ones(4, dtype=int))
a, b = motion_embedding(streak, box), motion_embedding(blob, box)
for name, other in (("blob", b), ("two pixels", e)):
    d = motion_distance(a, other)
    print(f"streak vs {name}: distance {d:.4f}, gated {gated_motion_distance(d, 0.2):.4f}")
print(f"streak vs itself scaled: {motion_distance(a, 3 * a.to_array()):.2e}")

# An empty crop is the one case that is always maximally distant, which is
# what separates a moving target from static clutter.
empty = motion_embedding(EventFrame(W, H), box)
print("empty vs streak", motion_distance(empty, a))
