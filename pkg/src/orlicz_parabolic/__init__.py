"""Intrinsic-scaling toolkit for degenerate parabolic equations with Orlicz growth."""
