"""
Tests package for the geometry functionality.
"""
