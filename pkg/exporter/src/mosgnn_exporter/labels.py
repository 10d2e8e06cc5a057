"""Ground-truth label assignment from change-detection masks.

Ground-truth frames use the change-detection convention: 255 marks moving
foreground, 0 static background, 50 hard shadow (treated as background),
85 outside the region of interest and 170 unknown (both ignored).
"""

from __future__ import annotations

import numpy as np

from .records import InstanceRecord

MOVING = 1
STATIC = 0
UNLABELED = 255


def assign_labels(record: InstanceRecord, gt_gray: np.ndarray | None) -> int:
    """Moving if > 50% of the instance overlaps foreground, static if > 50%
    overlaps background, otherwise unlabeled. Missing ground truth is
    unlabeled."""
    if gt_gray is None:
        return UNLABELED
    if gt_gray.shape != record.mask.shape:
        raise ValueError(f"{record.video}/{record.frame}: ground truth shape "
                         f"{gt_gray.shape} does not match frame {record.mask.shape}")
    under = gt_gray[record.mask]
    count = under.size
    fg = int(np.sum(under == 255))
    bg = int(np.sum(under <= 50))
    if fg * 2 > count:
        return MOVING
    if bg * 2 > count:
        return STATIC
    return UNLABELED
