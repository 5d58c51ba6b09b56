"""Green-hydrogen cost-potential toolkit.

Chains land-eligibility exclusion, renewable generation simulation,
sustainable-water assessment, per-region hydrogen system optimization and
socio-economic indicator mapping over plain lon/lat raster grids.
"""

__version__ = "0.1.0"
