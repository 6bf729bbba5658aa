"""Literal, unoptimized transcription of the envelope selection, used as a test oracle."""

from fractions import Fraction
from math import sqrt

import numpy as np

from depthfc.depth import mbd_bruteforce


def reference_envelope(curves, focal_obs):
    curves = np.asarray(curves, dtype=float)
    f = [float(v) for v in focal_obs]
    cut = len(f)
    obs = curves[:, :cut]
    n = obs.shape[0]
    iq = [j for j in range(cut) if min(obs[:, j]) <= f[j] <= max(obs[:, j])]
    if not iq:
        raise ValueError("empty")
    dist = {i: sqrt(sum((obs[i, j] - f[j]) ** 2 for j in range(cut))) for i in range(n)}

    def covered(S):
        return sum(1 for j in iq if min(obs[s, j] for s in S) <= f[j] <= max(obs[s, j] for s in S))

    def percentile(S):
        rep = mbd_bruteforce(np.vstack([f] + [obs[s] for s in S]))
        d = list(rep.counts)
        return Fraction(sum(1 for x in d if x <= d[0]), len(d))

    J, pool, trace = [], set(range(n)), []
    while len(pool) >= 2:
        cands = sorted(pool, key=lambda i: (dist[i], -i))
        N = [cands[0]]
        best = covered(N)
        for c in cands[1:]:
            val = covered(N + [c])
            if val > best:
                N.append(c)
                best = val
        accept = not J or percentile(J + N) >= percentile(J)
        trace.append((tuple(N), accept))
        if accept:
            J += N
        pool -= set(N)
    return J, trace
