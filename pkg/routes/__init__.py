"""Flask route blueprints for SCORE."""
