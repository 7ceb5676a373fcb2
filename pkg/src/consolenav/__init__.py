"""Navigation engine built on landmark-cooccurrence priors.

Library layout:

- ``store``      binary embedding store, pooling, similarity
- ``priors``     prompt building, response parsing, caching, fallbacks
- ``shifting``   landmark pointer automaton
- ``discovery``  phrase-over-views probability distributions
- ``scoring``    learnable cooccurrence scoring, losses, exact gradients
- ``agent``      action prediction, rollouts, teacher-forced training
- ``simenv``     synthetic world generator and benchmark bundles
- ``metrics``    navigation metrics (TL, NE, SR, SPL, CLS, nDTW, SDTW)
- ``cli``        command-line entry point (``console-nav``)
"""

__version__ = "0.1.0"
