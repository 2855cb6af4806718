class DomainError(ValueError):
    """A point lies outside the domain of a map, chart or Hamiltonian."""

    def __init__(self, message: str, coordinate: str | None = None):
        super().__init__(message)
        self.coordinate = coordinate
