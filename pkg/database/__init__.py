"""Results database client."""
