"""Trusting-trust laboratory: a self-hosting mini-Lisp compiler on a stack VM,
a maliciously corrupted variant, diverse double-compiling, and a checker for
the formal correspondence proofs."""

__version__ = "0.1.0"
