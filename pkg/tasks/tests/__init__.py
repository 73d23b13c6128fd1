"""
Tests package for the task, configuration and CLI functionality.
"""
