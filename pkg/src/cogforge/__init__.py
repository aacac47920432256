"""Guided discovery of cognitive models."""
