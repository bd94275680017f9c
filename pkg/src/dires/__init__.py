"""Local resilience of random digraphs for Hamiltonicity: experiments and tools."""

__version__ = "0.1.0"
