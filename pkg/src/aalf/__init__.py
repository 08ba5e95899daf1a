"""Per-step selection between an interpretable forecaster and a black-box one."""

__version__ = "0.1.0"
