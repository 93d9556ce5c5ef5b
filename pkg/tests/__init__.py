"""Test suite for the CONGEST shortest-path simulator."""
