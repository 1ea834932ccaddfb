# -*- coding: utf-8 -*-
from __future__ import print_function

from setuptools import setup
import sys

module_name = "roifcn"

if sys.version_info < (3, 6):
    print("Python 3.6 or higher required, please upgrade.")
    sys.exit(1)

# Set version
version = "2026.1.0.dev0"

entry_points = {'console_scripts': ['roifcn = roifcn.__main__:main']}


CLASSIFIERS = """\
Development Status :: 3 - Alpha
Intended Audience :: Science/Research
License :: OSI Approved :: GNU Lesser General Public License v3 or later (LGPLv3+)
Operating System :: POSIX
Operating System :: POSIX :: Linux
Operating System :: MacOS :: MacOS X
Programming Language :: Python
Programming Language :: Python :: 3
Topic :: Scientific/Engineering :: Image Recognition
Topic :: Scientific/Engineering :: Medical Science Apps.
"""

requires = ["numpy>=1.17", "six", "scipy"]

setup(name="roifcn",
      version=version,
      description="Detection-guided segmentation with region-of-interest convolutions",
      author="The ROIFCN developers",
      classifiers=[_f for _f in CLASSIFIERS.split('\n') if _f],
      entry_points=entry_points,
      packages=["roifcn"],
      package_dir={'roifcn': 'roifcn'},
      install_requires=requires,
      extras_require={"test": ["pytest", "pytest-cov"]},
      )
