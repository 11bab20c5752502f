"""
Star versus periphery
=====================

Top-level verdicts (the star around the post author) arrive faster than the
replies-to-replies around them.  Compare the two growth speeds across a
corpus, binned by thread duration.
"""

import numpy as np

from threadnet import dynamics
from threadnet.generator import AITA_LIKE, UNIFORM, generate_corpus
from threadnet.graph import from_thread

graphs = [from_thread(r) for r in generate_corpus(AITA_LIKE, 100, seed=7)]

# edges gained per minute, one-minute intervals
bins = dynamics.bin_and_average(dynamics.corpus_speeds(graphs, delta_m=1))
for b in range(bins.n_bins):
    r = bins.ratio[b]
    print(f"bin {b}: {len(bins.members[b]):>3} threads, star/periphery = {'-' if r is None else f'{r:.2f}'}")

# without a dominant star the ratio collapses
flat = [from_thread(r) for r in generate_corpus(UNIFORM, 100, seed=7)]
print("uniform preset median ratio:", round(dynamics.median_ratio(dynamics.bin_and_average(dynamics.corpus_speeds(flat, 1))), 2))

# voting replies take longer to write
voting = [e.response_time for g in graphs for e in g.edges if not e.is_star and e.label.is_vote]
other = [e.response_time for g in graphs for e in g.edges if not e.is_star and not e.label.is_vote]
print(f"periphery response time: voting {np.mean(voting):.0f} s, other {np.mean(other):.0f} s")
