"""Growing interaction networks of threaded online conversations.

Modules: ``ingest`` (dumps to thread records), ``generator`` (synthetic
corpora), ``graph`` (temporal multigraph and replay), ``metrics`` (density,
clustering and path-length traces), ``dynamics`` (growth speeds and response
times), ``stats`` (entropy, reciprocity, power-law fits, rewiring, Spearman)
and ``cli``.
"""

__version__ = "0.1.0"
