# import os
# exec(zlib.decompress(base64.b64decode(blob)))
"""
Nothing here runs: socket.socket() and s.connect(("10.0.0.1", 80))
live inside a docstring, and so does import subprocess.
"""
from setuptools import setup

NOTE = 'cmdclass = {"install": Evil}; urlopen("http://x")'

setup(name="decoys", description="exec(base64.b64decode(x)) is just text")
