"""Maxwell fields on the Schwarzschild exterior: mode evolution, first-order
superenergy diagnostics and rigorous certification of the radial inequalities
behind the Morawetz estimate."""

from .background import BackgroundModel, DomainError

__all__ = ["BackgroundModel", "DomainError"]
__version__ = "0.1.0"
