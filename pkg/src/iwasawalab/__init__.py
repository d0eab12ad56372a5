"""Exact arithmetic over truncated Iwasawa algebras of p-groups times Gamma:
class-sum transforms, integral logarithms, norm maps on K_1, and congruence
checkers for compatible unit tuples."""

__version__ = "0.1.0"
