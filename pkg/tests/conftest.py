"""Shared fixtures: geometry/mesh caches so expensive assemblies run once."""

import numpy as np
import pytest

import helmbem as hb
from helmbem.assembly import RegularizerChoice, assemble_system


@pytest.fixture(scope="session")
def curves():
    return {name: hb.make_geometry(name) for name in
            ("circle", "ellipse", "kite", "square", "moon", "elliptic_cavity")}


class SystemCache:
    """Memoizes meshes and assembled operator systems across tests."""

    def __init__(self):
        self._curves = {}
        self._meshes = {}
        self._systems = {}

    def curve(self, name):
        if name not in self._curves:
            self._curves[name] = hb.make_geometry(name)
        return self._curves[name]

    def mesh(self, name, k, ppw=10.0):
        key = (name, float(k), float(ppw))
        if key not in self._meshes:
            self._meshes[key] = hb.build_mesh(self.curve(name), k, ppw)
        return self._meshes[key]

    def system(self, name, k, ppw=10.0, reg="sik", adjoint=True, slp=True):
        key = (name, float(k), float(ppw), reg, adjoint, slp)
        if key not in self._systems:
            self._systems[key] = assemble_system(
                self.mesh(name, k, ppw), k, RegularizerChoice(reg),
                need_adjoint=adjoint, need_slp=slp,
            )
        return self._systems[key]


@pytest.fixture(scope="session")
def cache():
    return SystemCache()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)
