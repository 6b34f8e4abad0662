"""vimedkit: build machine-translated biomedical corpora and benchmarks."""

__version__ = "0.1.0"
