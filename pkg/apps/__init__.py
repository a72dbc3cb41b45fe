# This file makes the apps directory a Python package
