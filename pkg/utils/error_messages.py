"""Input validation and user-facing messages for the command line."""
import re
from fractions import Fraction
from typing import List, Optional, Tuple

from congest.graph import GeneratorSpec

SOURCE_TOKEN = re.compile(r'^(\d+|[a-z])$')


def validate_generator_spec(spec: GeneratorSpec) -> Tuple[bool, Optional[str]]:
    """
    Validate generator flags.

    Args:
        spec: Generator parameters from the command line

    Returns:
        Tuple of (is_valid, error_message)
    """
    problems = spec.problems()
    if problems:
        return False, "Invalid generator flags: " + "; ".join(problems)
    return True, None


def parse_sources(text: str) -> List[int]:
    """
    Turn '0,3,5' or 'a,b' into node IDs (a=0, b=1, ...).

    Raises:
        ValueError: a token is neither a decimal ID nor a single lowercase letter
    """
    ids = []
    for raw in text.split(","):
        token = raw.strip().lower()
        if not token:
            continue
        if not SOURCE_TOKEN.match(token):
            raise ValueError(f"'{raw.strip()}' is not a node ID")
        ids.append(int(token) if token.isdigit() else ord(token) - ord("a"))
    return ids


def validate_sources(text: str, n: int) -> Tuple[bool, Optional[str]]:
    """
    Validate a comma-separated source list against a graph of n nodes.

    Returns:
        Tuple of (is_valid, error_message)
    """
    try:
        ids = parse_sources(text)
    except ValueError as e:
        return False, f"{e}. Use decimal IDs or letters, e.g. 0,2 or a,c"

    if not ids:
        return False, "Source list cannot be empty"

    outside = [v for v in ids if not 0 <= v < n]
    if outside:
        return False, get_node_out_of_range_message(outside[0], n)

    return True, None


def validate_epsilon(text: str) -> Tuple[bool, Optional[str]]:
    """
    Validate an approximation parameter given on the command line.

    The lower limit 3/n depends on the graph and is enforced by the algorithm.

    Returns:
        Tuple of (is_valid, error_message)
    """
    try:
        epsilon = Fraction(text)
    except (ValueError, ZeroDivisionError):
        return False, f"'{text}' is not a number"

    if epsilon <= 0:
        return False, "Epsilon must be positive"

    return True, None


def get_node_out_of_range_message(node: int, n: int) -> str:
    return f"Node {node} does not exist; this graph has nodes 0 to {n - 1}."


def get_epsilon_too_small_message(epsilon: Fraction, n: int) -> str:
    """
    Explain the lower limit on epsilon.

    Args:
        epsilon: Rejected value
        n: Number of nodes

    Returns:
        User-friendly error message
    """
    smallest = Fraction(3, n)
    return (
        f"Epsilon {float(epsilon):g} is too small for n={n}. "
        f"It must exceed 3/n = {float(smallest):.4g}; "
        "use a larger epsilon or a larger graph."
    )


def get_unknown_algorithm_message(name: str, known: List[str]) -> str:
    return f"Unknown algorithm '{name}'. Choose one of: {', '.join(known)}"


def get_verification_failed_message(algorithm: str, violations: List[str]) -> str:
    """
    Summarize a failed verification.

    Args:
        algorithm: Algorithm that was run
        violations: Violation descriptions

    Returns:
        User-friendly error message
    """
    shown = violations[:5]
    more = len(violations) - len(shown)
    lines = [f"{algorithm} disagreed with the reference oracle:"]
    lines += [f"• {v}" for v in shown]
    if more > 0:
        lines.append(f"• ... and {more} more")
    return "\n".join(lines)
