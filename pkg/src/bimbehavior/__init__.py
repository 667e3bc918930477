"""Mine BIM design-behaviour logs, relate them to design quality, explain the models."""

__version__ = "0.1.0"
