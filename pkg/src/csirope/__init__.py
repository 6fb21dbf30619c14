"""Desk-scale laboratory for channel-aware positional encodings on CSI transformers.

Subpackages cover: a minimal reverse-mode tensor engine (`autodiff`), a
sum-of-paths synthetic channel generator (`channel`) with a binary dataset
format (`dataset_io`), autocorrelation / coherence analysis (`coherence`),
3D patch tokenization and masking (`tokenizer`), five positional-encoding
variants plus diagnostics (`posenc`), a toy masked encoder-decoder with
training and NMSE evaluation (`model`, `training`), and a CLI (`cli`).
"""

__version__ = "0.1.0"
