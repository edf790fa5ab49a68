"""Index policies for general score functionals of unknown distributions."""
