"""oqsim: elementary components of translation-invariant open quantum dynamics.

Library layout:

* domain     parameters, grids, elementary components, trace classification
* profiles   analytic and sampled relative-coordinate profiles
* propagator closed-form mode evolution by the method of characteristics
* integrator independent numerical oracle (method of lines, RK4)
* states     spectral synthesis, observables, long-time asymptotics
* rotations  Clebsch-Gordan / Wigner machinery and tensor-operator bases
* symmetry   two-sided vs diagonal translation action diagnostics
* cli        reproducible scenario runner
"""

__version__ = "0.1.0"
