from setuptools import setup

setup(
    name='qdselect',
    version='0.1',
    url='http://github.com/noahwaterfieldprice/qdselect/',
    author='Noah Waterfield Price',
    author_email='noah.waterfieldprice@physics.ox.ac.uk',
    description='A package for selecting instruction tuning subsets '
                'that trade off data quality against diversity.',
    packages=['qdselect', 'qdselect.io'],
    package_data={'qdselect': ['static/*.json']},
    python_requires='>=3.9',
    install_requires=['numpy>=1.17', 'httpx>=0.23', 'tenacity>=8.2'],
    extras_require={'test': ['pytest', 'pytest-mock', 'pytest-cov']},
    entry_points={'console_scripts': ['qdselect = qdselect.cli:main']}
)
