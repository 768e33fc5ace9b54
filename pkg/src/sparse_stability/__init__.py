"""Real, sparse, Frobenius-norm stability radius of continuous-time LTI systems."""

__version__ = "0.1.0"
__author__ = "Dhavan"
__email__ = "codingquark@gluon.lan"
