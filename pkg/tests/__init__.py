"""Test package for the IR significance simulation framework."""
