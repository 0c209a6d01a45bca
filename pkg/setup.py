from setuptools import find_packages, setup

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [
        line.split("#")[0].strip()
        for line in fh.read().splitlines()
        if line.split("#")[0].strip()
    ]

setup(
    name="partial_barrier",
    version="0.1.0",
    packages=find_packages(where="src"),
    include_package_data=True,
    package_dir={"": "src"},
    package_data={"partial_barrier_cli": ["templates/*.j2"]},
    install_requires=requirements,
    description="Partial-barrier distributed gradient descent for kernelized ridge regression on a simulated cluster, with numerical verification of its convergence bounds.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    entry_points={
        "console_scripts": [
            "partial-barrier=partial_barrier_cli.__main__:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
    ],
    python_requires=">=3.9",
    keywords="distributed gradient descent straggler ridge-regression simulation",
)
