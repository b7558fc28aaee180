"""Summarize malware sandbox reports with an LLM and score the summaries."""

__version__ = "0.1.0"
