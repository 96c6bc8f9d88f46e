"""Three equivalent descriptions of an exchangeable population.

A symmetric joint law over n binary statuses is pinned down by any one of:
the count distribution alpha, the per-outcome weights w, or the
all-negative curve q.  This script builds a model each way and converts
between them.
"""

import numpy as np

from poolpart import (
    SymmetricModel,
    alpha_from_w,
    iid_model,
    marginal_zero_bruteforce,
    prevalence,
    q_from_alpha,
    w_from_alpha,
    w_from_q,
)

n = 8

# IID is the special case alpha = Binomial(n, p); q then factorizes
m_iid = iid_model(n, 0.1)
qc = q_from_alpha(m_iid)
print("IID model, p = 0.1")
print("  q(h)      ", np.array2string(qc.q, precision=4))
print("  0.9**h    ", np.array2string(0.9 ** np.arange(n + 1), precision=4))

# a clustered population at the same prevalence: positives arrive in
# bursts of 4, so most groups still test all-negative
alpha = np.zeros(n + 1)
alpha[0] = 0.8
alpha[4] = 0.2
m_clustered = SymmetricModel(n, alpha)
print("\nclustered model, same prevalence:", prevalence(m_clustered))
print("  q(h)      ", np.array2string(q_from_alpha(m_clustered).q, precision=4))

# round trip: alpha -> q -> w -> alpha comes back exactly
back = alpha_from_w(w_from_q(q_from_alpha(m_clustered)))
print("\nalpha -> q -> w -> alpha drift:", np.max(np.abs(back.alpha - alpha)))

# w is tiny where many outcomes share the count mass
wv = w_from_alpha(m_iid)
print("\nw(k) for the IID model:", np.array2string(wv.w, precision=6))

# q(h) really is the probability that h specimens all test negative:
# check against a sum over all 2^n outcomes
h = 3
print("\nq(3) =", qc.q[h], " brute force:", marginal_zero_bruteforce(m_iid, h))
