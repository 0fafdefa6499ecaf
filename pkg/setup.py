from setuptools import setup

# Let setuptools handle everything based on pyproject.toml configuration
setup(
    include_package_data=True,
    packages=["qworkstat"],
)
