"""reqexec: executable-requirements engine.

Parses .rqm requirements models (conceptual classes, use cases, contracts,
invariants), compiles each operation contract into a plan of primitive
object-store operations, and executes the plans with precondition guards,
invariant checking, and state observation.
"""

__version__ = "0.1.0"
