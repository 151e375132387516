"""SIW cavity-backed antenna design and a discrete-event VANET simulator."""

__version__ = "0.1.0"
