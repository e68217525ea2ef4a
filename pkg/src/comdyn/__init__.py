"""comdyn: closed spectral propagation of commutative open-system dynamics.

Subpackages cover Hilbert-Schmidt superoperator algebra (:mod:`.superop`),
circulant stochastic dynamics on Z_d^N (:mod:`.classical`), Weyl-covariant
quantum dynamics (:mod:`.weyl`), commuting generator constructions
(:mod:`.generators`), the per-mode memory-kernel correspondence
(:mod:`.kernel`), the fully worked two-level case (:mod:`.qubit`), and the
brute-force time-ordered reference integrator (:mod:`.oracle`).
"""

from . import classical, generators, kernel, oracle, qubit, superop, timefn, weyl

__all__ = [
    "classical",
    "generators",
    "kernel",
    "oracle",
    "qubit",
    "superop",
    "timefn",
    "weyl",
]

__version__ = "0.1.0"
