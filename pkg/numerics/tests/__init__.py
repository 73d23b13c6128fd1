"""
Tests package for the numerics functionality.
"""
