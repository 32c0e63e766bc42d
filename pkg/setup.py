"""setup.py"""
from setuptools import setup, find_packages

with open("README.md", "r") as fh:
    long_description = fh.read()

setup(
    name="apparelmotion",
    version="0.0.1",
    packages=find_packages(exclude=["tests"]),
    description="Motion transfer onto rigged characters wearing loose apparel",
    long_description=long_description,
    long_description_content_type="text/markdown",
    python_requires=">=3.8,<3.11",
    install_requires=[
        "numpy==1.24.4",
        "pydantic==1.9.0",
        "scipy==1.10.1",
        "structlog==20.2.0",
        "toml==0.10.2",
    ],
    scripts=["bin/apparelmotion.py"],
    entry_points={"console_scripts": ["apparelmotion=apparelmotion.cli:main"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
)
