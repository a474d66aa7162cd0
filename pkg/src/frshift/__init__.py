"""Fredholm analysis of singular integral operators with shifts."""
