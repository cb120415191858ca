import numpy as np

MATCH_TOL = 1e-9


def match_rows(angles, gt_angles, tol=MATCH_TOL):
    """Row of `gt_angles` equal to each row of `angles` within `tol`, or -1.

    Args:
        angles (ndarray): k x d vectors to look up.
        gt_angles (ndarray): n x d reference rows.

    Returns:
        ndarray: k indices into gt_angles.
    """
    angles = np.asarray(angles, dtype=np.float64)
    gt_angles = np.asarray(gt_angles, dtype=np.float64)
    lookup = {}
    for i, row in enumerate(map(tuple, gt_angles)):
        lookup.setdefault(row, i)
    out = np.full(angles.shape[0], -1, dtype=np.int64)
    for i, row in enumerate(angles):
        j = lookup.get(tuple(row))
        if j is None and gt_angles.size:
            near = np.flatnonzero(np.abs(gt_angles - row).max(axis=1) <= tol)
            j = int(near[0]) if near.size else None
        if j is not None:
            out[i] = j
    return out
