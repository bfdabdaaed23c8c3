"""
Two-qubit weak-measurement simulation: states, measurements, concurrence and
measurement sequences with known or unknown outcomes.
"""
