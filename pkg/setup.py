#!/usr/bin/env python
import os

from setuptools import Command, find_packages, setup


class CleanCommand(Command):
    """Remove build leftovers, documentation builds and simulation outputs."""

    description = "Cleans out caches, docs builds and run artifacts"
    user_options = []

    def initialize_options(self):
        pass

    def finalize_options(self):
        pass

    def run(self):
        cmd_list = dict(
            pyc="find . -name '*.pyc' -delete;",
            egg="find . -name '*.egg-info' -exec rm -rf {} +;",
            cache="find ./src ./test -name '__pycache__' -exec rm -rf {} +;",
            doc="rm -rf docs/doc/* docs/coverage/*;",
            runs="rm -rf runs/*;",
        )
        for cmd in cmd_list.values():
            os.system(cmd)


# Most of the config is read from setup.cfg
setup(
    packages=find_packages(where="src", exclude=("test",)),
    package_dir={"": "src"},
    cmdclass={
        "clean": CleanCommand,
    },
)
