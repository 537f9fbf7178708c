from setuptools import setup

setup(name="tiny", version="1.0", py_modules=["tiny"])
