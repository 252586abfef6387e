"""Unit tests for mtextremal."""
