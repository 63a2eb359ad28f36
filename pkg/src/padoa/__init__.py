"""Outer approximation and partially decomposed outer approximation for block-structured MICPs."""
