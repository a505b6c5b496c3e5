# Utilities for robust capacity
