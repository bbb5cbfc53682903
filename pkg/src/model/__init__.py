"""Parameter containers, transforms and the simulation catalog."""
