"""Domain layer - core data types, enumerations and errors."""
