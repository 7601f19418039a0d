# -*- coding: utf-8 -*-
#                                                     #
#  __authors__ = wavedof developers                   #
#                                                     #

from setuptools import setup, find_packages

setup(
    name='wavedof',
    version='0.1.0',
    packages=find_packages(include=['wavedof', 'wavedof.*']),
    license='MIT',
    author='wavedof developers',
    description='Directivity-aware wavenumber-domain coupling coefficients, EDoF and ergodic capacity of XL-MIMO '
                'planar arrays',
    python_requires='>=3.9',
    install_requires=['numpy>=1.22', 'scipy>=1.8', 'pandas>=1.5', 'joblib>=1.1', 'pyyaml>=6.0'],

    # use entry point to create a command that will run the main function
    entry_points={
        'console_scripts': ['wavedof = wavedof.main:main']
    },
    setup_requires=['pytest-runner'],
    tests_require=['pytest'],

    long_description=open('docs/README.md').read(),
    long_description_content_type='text/markdown',
)
