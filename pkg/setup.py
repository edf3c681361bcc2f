import pathlib
from setuptools import setup

from r13_mfem import VERSION

readme_file = pathlib.Path(__file__).parent.resolve() / 'README.md'
readme_contents = readme_file.read_text()

install_requires = ['numpy', 'scipy', 'sympy']

setup(
    name="r13_mfem",
    version=VERSION,
    packages=['r13_mfem', 'r13_mfem.cases'],
    description="Bubble-enriched mixed finite elements for the linearized R13 equations of rarefied gas flow",
    package_data={"r13_mfem": ["examples/*.cfg"]},
    include_package_data=True,
    long_description=readme_contents,
    long_description_content_type='text/markdown',
    license='ModifiedBSD',
    install_requires=install_requires,
    entry_points={
        'console_scripts': ['r13_mfem=r13_mfem.runner:main_cli']
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Natural Language :: English',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3 :: Only',
        'Topic :: Scientific/Engineering',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    platforms=[
        'Linux (Tested on Ubuntu)', 'MacOSX', 'Windows'
    ],
    keywords=[
        'finite elements', 'mixed finite elements', 'inf-sup stability',
        'R13 equations', 'rarefied gas', 'kinetic gas theory', 'moment equations',
    ]
)
