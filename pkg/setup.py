import setuptools

with open('README.md', 'r') as handle:
    long_description = handle.read()

with open('requirements.txt') as f:
    requirements = f.read().splitlines()

setuptools.setup(
    name='bdagar',
    version='0.1.0',
    description='Bivariate DAGAR models for joint disease mapping on areal data.',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=setuptools.find_packages(exclude=['tests', 'tests.*']),
    classifiers=[
        'Programming Language :: Python :: 3',
        'Licence :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
    ],
    python_requires='>=3.9',
    install_requires=requirements,
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['bdagar=bdagar.cli:main']},
)
