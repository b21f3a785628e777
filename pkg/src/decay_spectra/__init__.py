"""Simulation and verification library for spectral statistics of 1-D
Schrodinger operators -d^2/dt^2 + a(t) F(X_t) with decaying random potential.

Submodules
----------
potential   envelopes, circle Brownian paths, Fourier data, resolvent, tau(E)
operators   Dirichlet finite-difference operator, Sturm counts, eigenpairs
prufer      phase/radius shooting integration and radius renormalization
shape       normalized eigenvector shape measures and their statistics
pointproc   rescaled decorated eigenvalue point processes near E0
limits      limiting objects: r-tilde SDE, critical shapes, Sine_beta, clock, Poisson
harness     seeded experiment runners, mergeable reports, serialization
"""

__version__ = "0.1.0"
