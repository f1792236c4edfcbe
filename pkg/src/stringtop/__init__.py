"""stringtop: a workbench for loop observables and graded bracket identities.

The package computes holonomy-type observables of piecewise-linear loops on
flat spaces, with coefficients in a finite Grassmann algebra, and
cross-checks a family of algebraic identities relating them: trace fusion
over gl(n), transversal intersection brackets of loop families, graded
Poisson brackets on finite phase models, and chord diagram relations.
"""

__version__ = "0.1.0"

from stringtop.grassmann import GradedCoefficient, gc_body, gc_mul

__all__ = ["GradedCoefficient", "gc_mul", "gc_body", "__version__"]
