"""Run orchestration, reports and benchmark sweeps."""
