"""The four applications: geometric sums, critical Galton-Watson trees,
uniform attachment and preferential attachment."""
