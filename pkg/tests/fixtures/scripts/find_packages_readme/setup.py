from setuptools import find_packages, setup

with open("README.md", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="readable",
    version="2.3.1",
    long_description=long_description,
    packages=find_packages(exclude=["tests"]),
    install_requires=["requests>=2.0"],
)
