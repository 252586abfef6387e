"""Utility functions and helpers for mtextremal."""

from .logging_setup import setup_logging, get_logger

__all__ = ["setup_logging", "get_logger"]
