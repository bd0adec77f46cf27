from setuptools import setup

requirements = [
    "numpy>=1.16",
    "scipy>=1.8",
    "pandas>=2.2",
    "shapely>=2.0",
    "pyyaml>=6.0",
    "wandb>=0.16",
    "tqdm>=4.0",
]

setup(
    name="ssat_cbf",
    version="1.0",
    description="Smooth separating-axis collision margins and ECBF-QP safety filtering for a wheeled-legged robot",
    author="The ssat_cbf developers",
    python_requires='>=3.9',
    packages=["ssat_cbf", "ssat_cbf.geometry", "ssat_cbf.planner", "ssat_cbf.safety", "ssat_cbf.simharness"],
    install_requires=requirements,
    extras_require={"test": ["pytest>=7.0", "torch>=2.1.1"]},
    entry_points={"console_scripts": ["ssat-cbf = ssat_cbf.cli:main"]},
)
