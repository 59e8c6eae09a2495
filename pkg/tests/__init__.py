"""Tests for adipal."""
