"""CONGEST-model simulation core: graphs, engine, distances."""
