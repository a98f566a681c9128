"""Equilibrium toolkit for renewable suppliers competing with optional storage.

Suppliers first decide whether to invest in storage, then bid prices and
quantities each hour, after which consumers buy from the cheapest bids. The
modules follow that structure:

``distributions``  piecewise-linear generation CDFs
``market``         allocation, dominant quantities, revenue
``stage2``         price equilibria (pure and mixed)
``stage1``         investment game and thresholds
``sizing``         storage capacity and hourly cost
``oracle``         discretized game, best responses, epsilon-Nash checks
``sweep``          data ingestion and parameter sweeps
"""

__version__ = "0.1.0"

from .errors import ConfigError, RegimeError, SolverError  # noqa: E402

__all__ = ["ConfigError", "RegimeError", "SolverError", "__version__"]
