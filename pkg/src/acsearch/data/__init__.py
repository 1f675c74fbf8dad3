"""Bundled networks and graph files."""

from importlib import resources


def data_path(name: str):
    return resources.files(__name__).joinpath(name)


def read_text(name: str) -> str:
    return data_path(name).read_text()
