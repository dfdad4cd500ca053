"""Privacy-preserving SVM inference over a from-scratch RNS-CKKS scheme."""

__version__ = "0.1.0"
