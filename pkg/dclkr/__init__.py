"""Distillation-based collaborative kernel regression."""
