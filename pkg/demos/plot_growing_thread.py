"""
Watching one thread grow
========================

Generate a judgment-style thread, replay it comment by comment and look at
how its interaction network changes.
"""

from threadnet import metrics
from threadnet.generator import AITA_LIKE, generate_thread
from threadnet.graph import from_thread

# one synthetic thread; the seed fixes everything
record = generate_thread(AITA_LIKE)
g = from_thread(record)
print(f"{len(record.comments)} comments, {g.n_vertices} users")

# every comment is an edge from its author to the parent's author
trace = metrics.trace(g, stride=30)
print(f"{'k':>5} {'users':>6} {'gcc':>7} {'aspl':>6} {'diam':>5}")
for s in trace.samples:
    print(f"{s.k:>5} {s.n_vertices:>6} {s.gcc:>7.4f} {s.aspl:>6.3f} {s.diameter:>5}")

# big threads: landmark mode estimates ASPL from a seeded sample of BFS roots
approx = metrics.trace(g, stride=len(g.edges), mode=metrics.LANDMARK, landmarks=64, seed=1)
print("landmark ASPL at the end:", round(approx.samples[-1].aspl, 3))
