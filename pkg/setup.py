from setuptools import find_packages, setup

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="sphquad-kit",
    version="0.1.0",
    author="sphquad developers",
    description="icosahedrally invariant quadrature on the sphere, benchmarks and a discrete-ordinates transport solver",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    python_requires=">=3.10",
    install_requires=[
        "python-dotenv>=1.0.1",
        "numpy>=1.26.2,<3",
        "scipy>=1.11.0",
        "pydantic>=2.10.4",
        "langchain>=0.3.12",
    ],
    extras_require={
        "dev": [
            "pytest==8.3.4",
            "black==24.10.0",
            "isort>=5.10.0",
            "mpmath>=1.3.0",
            "pre-commit>=4.0.1",
        ]
    },
    entry_points={
        "console_scripts": ["sphquad=sphquad_kit.cli:main"],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
    ],
    include_package_data=True,
)
