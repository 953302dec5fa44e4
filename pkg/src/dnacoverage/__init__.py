"""Coverage-depth analysis for sequencing-based DNA storage retrieval.

Modules: ``channel`` (PCR and log-normal read channels), ``analytic``
(recovered-strand moments, read-count inversion, expected reads),
``bounds`` (lower bounds and binomial tails), ``montecarlo`` (seeded urn
simulation), ``ingest`` (read-count tables) and ``cli``.
"""

__version__ = "0.1.0"
