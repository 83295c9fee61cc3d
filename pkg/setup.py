import os

from setuptools import find_packages, setup

# Try to load the version from a datafile in the package
package_version = "1.0.0.dev0"
package_version_path = os.path.join(os.path.dirname(__file__), 'scanspectra', 'VERSION')
if os.path.exists(package_version_path):
    with open(package_version_path) as package_version_file:
        package_version = package_version_file.read().strip()

# read the contents of your README file
this_directory = os.path.abspath(os.path.dirname(__file__))
with open(os.path.join(this_directory, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

setup(
    name="scanspectra",
    version=package_version,
    description="Exact spectral gaps and mixing times of Glauber dynamics and systematic scan Gibbs samplers",
    long_description=long_description,
    long_description_content_type='text/markdown',
    license="MIT",
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',
    ],
    keywords="markov chain gibbs sampler glauber dynamics systematic scan spectral gap mixing time",
    packages=find_packages(exclude=['test', 'test/*']),
    python_requires='>=3.9',
    install_requires=[
        'numpy',
        'scipy',
        'tabulate',
        'PyYAML',
    ],
    extras_require={
        'test': [
            'pytest',
            'pytest-mock',
        ]
    },
    entry_points={
        'console_scripts': [
            'scanspectra = scanspectra.run.cli:shell_main',
        ],
    },
    package_data={
        '': [
            "VERSION",
        ],
        "scanspectra": ["py.typed"]
    }
)
