"""
Tests package for the verification harness.
"""
