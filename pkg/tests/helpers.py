"""Shared test helpers."""

import itertools

import numpy as np
from hypothesis import strategies as st

from permsync.errors import Disconnected
from permsync.model import ObservationGraph, Permutation, validate_graph


def perms(n):
    return st.permutations(list(range(n))).map(lambda p: Permutation(tuple(p)))


def all_perms(n):
    return [Permutation(p) for p in itertools.permutations(range(n))]


def random_graph(rng, n, m, density=1.0):
    """Random (possibly inconsistent) labels on a connected random edge set."""
    while True:
        edges = {}
        for i in range(m):
            for j in range(i + 1, m):
                if rng.random() < density:
                    edges[(i, j)] = Permutation(tuple(int(c) for c in rng.permutation(n)))
        try:
            return validate_graph(ObservationGraph(n, m, edges))
        except Disconnected:
            continue
