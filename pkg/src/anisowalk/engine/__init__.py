"""Moteur de simulation : noyaux numba, pool de répliques, rapports."""
