"""STL specification embeddings and a shared recurrent controller.

The package evaluates signal temporal logic formulas on discrete-time
trajectories, differentiates smoothed robustness through a small reverse
mode tape, builds spec-similarity datasets from optimized trajectories,
trains skip-gram embeddings of the specs, and finally trains one LSTM
controller conditioned on those embeddings to satisfy every spec in a
library.
"""

__version__ = "0.1.0"
