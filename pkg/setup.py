from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="regretlab",
    version="0.1.0",
    author="Mark Brooks",
    author_email="",
    description="Regret of mismatched MMSE estimation under channel-gain uncertainty: posteriors, Fisher informations, regret bounds and a reproducible experiment harness.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(include=["regretlab", "regretlab.*"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: 3.13",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.10",
    install_requires=[
        "decologr",
        "numpy>=1.20.0",
        "scipy>=1.7.0",
    ],
    extras_require={
        "test": ["pytest>=7.0"],
        "docs": ["sphinx>=5.0", "sphinx-rtd-theme"],
    },
    entry_points={
        "console_scripts": [
            "regretlab=regretlab.cli:main",
        ],
    },
)
