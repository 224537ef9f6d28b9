"""Global solution and Lagrangian duality analysis of generalized trace ratio problems."""

__version__ = "0.1.0"
