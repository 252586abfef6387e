"""Test package for mtextremal."""
