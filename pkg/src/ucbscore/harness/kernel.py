"""Compiled single-replication loop.

Mirrors ``engine.run_horizon`` step for step, using the same numba cores for
statistics and indices, so both routes select identical arm sequences on the
same tapes.  Only built-in scores are supported here; custom scores go through
the Python engine.
"""

import numpy as np
from numba import njit

from ..models.coverage import _cells, _coverage_index
from ..models.interval import _interval_index_mean, _interval_update
from ..models.normal import _index_chk, _index_threshold, _index_var, _normal_update
from ..models.pareto import _pareto_index, _pareto_update

PARETO, COVERAGE, INTERVAL, NORMAL_CHK, NORMAL_VAR, NORMAL_THR = range(6)
FAMILY_CODES = {
    "pareto": PARETO,
    "coverage": COVERAGE,
    "interval": INTERVAL,
    "normal_chk": NORMAL_CHK,
    "normal_var": NORMAL_VAR,
    "normal_thr": NORMAL_THR,
}


@njit(cache=True)
def _rebin(mask_row, samples, d):
    mask_row[:] = False
    occupied = 0
    for x in samples:
        c = min(int(x * d), d - 1)
        if not mask_row[c]:
            mask_row[c] = True
            occupied += 1
    return occupied


@njit(cache=True)
def simulate(family, gpar, arm_sigma, tapes, ties, n0, checkpoints, selections):
    """Run one replication; returns pull counts at each checkpoint (K x N).

    ``gpar`` holds family-wide settings: pareto (score code, floor),
    coverage (schedule code), threshold (kappa).  ``selections`` is filled
    with the chosen arm per round when it has length ``H``.
    """
    N, H = tapes.shape
    count = np.zeros(N, np.int64)
    s1 = np.zeros(N)
    s2 = np.zeros(N)
    idx = np.empty(N)
    tied = np.empty(N, np.int64)
    out = np.zeros((checkpoints.shape[0], N), np.int64)
    record = selections.shape[0] == H

    kind = 0
    dmax = 1
    if family == COVERAGE:
        kind = int(gpar[0])
        dmax = _cells(H, kind) + 1
    mask = np.zeros((N, dmax), np.bool_)
    dcur = np.zeros(N, np.int64)
    occ = np.zeros(N, np.int64)

    kc = 0
    warmup = n0 * N
    for step in range(H):
        if step < warmup:
            arm = 0
            while count[arm] >= n0:
                arm += 1
        else:
            n = float(step)
            for i in range(N):
                t = count[i]
                if family == PARETO:
                    idx[i] = _pareto_index(t, s1[i], s2[i], n, int(gpar[0]), gpar[1])
                elif family == COVERAGE:
                    d = dcur[i]
                    idx[i] = _coverage_index(occ[i] / d, n, t, d + 1)
                elif family == INTERVAL:
                    idx[i] = _interval_index_mean(t, s1[i], s2[i], n)
                elif family == NORMAL_CHK:
                    idx[i] = _index_chk(t, s1[i], s2[i], n)
                elif family == NORMAL_VAR:
                    idx[i] = _index_var(t, s2[i], n)
                else:
                    idx[i] = _index_threshold(t, s1[i], n, gpar[0], arm_sigma[i])
                if idx[i] != idx[i]:
                    raise ValueError("index value is NaN")
            best = idx[0]
            for i in range(1, N):
                if idx[i] > best:
                    best = idx[i]
            m = 0
            for i in range(N):
                if idx[i] == best:
                    tied[m] = i
                    m += 1
            if m == 1:
                arm = tied[0]
            else:
                arm = tied[int(ties[step] * m)]

        x = tapes[arm, count[arm]]
        t = count[arm]
        if family == PARETO:
            t, s1[arm], s2[arm] = _pareto_update(t, s1[arm], s2[arm], x)
        elif family == COVERAGE:
            t += 1
            d = _cells(t, kind)
            if d != dcur[arm]:
                dcur[arm] = d
                occ[arm] = _rebin(mask[arm], tapes[arm, :t], d)
            else:
                c = min(int(x * d), d - 1)
                if not mask[arm, c]:
                    mask[arm, c] = True
                    occ[arm] += 1
        elif family == INTERVAL:
            t, s1[arm], s2[arm] = _interval_update(t, s1[arm], s2[arm], x)
        else:
            t, s1[arm], s2[arm] = _normal_update(t, s1[arm], s2[arm], x)
        count[arm] = t
        if record:
            selections[step] = arm
        if kc < checkpoints.shape[0] and step + 1 == checkpoints[kc]:
            out[kc, :] = count
            kc += 1
    return out
