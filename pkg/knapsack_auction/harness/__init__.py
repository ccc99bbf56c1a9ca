"""Configuration, environments, random streams, sweeps, reporting and the command line."""
