"""Consensus and flocking under intermittent communication."""
