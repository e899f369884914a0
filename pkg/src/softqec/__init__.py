"""Soft-output decoding for repetition, surface and hierarchical codes."""
