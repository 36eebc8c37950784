"""vigil: vehicle surveillance pipeline — frames in, attributed sightings out."""

__version__ = "0.1.0"
