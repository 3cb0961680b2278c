"""uiq: a weighted universal-IQ benchmark harness for machines and humans."""

__version__ = "0.1.0"
