"""Energy-efficiency regression toolkit."""
