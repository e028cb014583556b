"""
Test suite for the sparse coding interpretability toolkit.
"""
