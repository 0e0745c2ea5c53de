"""Next-token prediction games and perplexity estimation.

Measures top-1 accuracy and perplexity of arbitrary next-token predictors:
built-in n-gram models, degenerate test predictors, remote models behind an
HTTP protocol, and live human participants playing the two hosted games.
Human (or simulated) comparison answers are turned into probability ratios
and fed to an importance-sampling estimator of the loss gap against a
reference generator model.
"""

__version__ = "0.1.0"
