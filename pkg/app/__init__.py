"""Resonance Lab.

Numerical laboratory for semiclassical half-line Schrodinger operators:
- Locate Neumann eigenvalues, bound states and antibound states by Prufer shooting
- Check the Wronskian, cone, growth and k-derivative identities at runtime
- Sweep h, pair states and fit their exponential convergence
- Emit states/pairs tables, fits and scatter plots
"""

__version__ = "0.1.0"
