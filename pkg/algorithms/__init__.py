"""Distributed shortest-path algorithms run on the CONGEST engine."""
