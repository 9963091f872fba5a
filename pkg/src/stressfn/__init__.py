"""Stress-function solvers for plane elasticity benchmarks.

Subpackages follow the pipeline: `jets`/`tape` (differentiation engine),
`nets` (tanh networks and branch/trunk composites), `optim` (Adam training
loop), `quad` (sampling and integration), `fields` (admissible stress
functions), the three benchmark modules (`torsion`, `tube`, `wedge`), the
operator-learning stage (`operator`), and the `cli` runner.
"""

__version__ = "0.1.0"
