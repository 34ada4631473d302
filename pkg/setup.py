import setuptools
from os import path

this_directory = path.abspath(path.dirname(__file__))
with open(path.join(this_directory, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

setuptools.setup(
    name = "aren-vqvae",
    version = "0.1.0",

    description = "Attentive VQ-VAE for image reconstruction and restoration",
    license = "BSD",

    long_description = long_description,
    long_description_content_type = 'text/markdown',

    classifiers = [
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: BSD License",
        "Natural Language :: English",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Image Processing",
    ],

    packages = setuptools.find_packages(exclude=["tests"]),
    python_requires = ">=3.8",
    install_requires = [
        "click",
        "configparser",
        "numpy>=1.20",
        "Pillow>=9.1",
    ],
    extras_require = {
        "color": ["colorlog"],
        "test": ["pytest"],
    },

    include_package_data = True,
    package_data = {
        "arenvq": ["defaults.ini"],
    },
    entry_points = {
        "console_scripts": [
            "aren-vq = arenvq.cli:main"
        ]
    }
)
