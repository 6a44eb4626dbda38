# detection/exceptions.py


class DetectionError(ValueError):
    """Базовая ошибка валидации входных данных детектора."""


class InsufficientPointsError(DetectionError):
    """Точек меньше, чем k + 1."""

    def __init__(self, n, k):
        self.n = n
        self.k = k
        super().__init__(f"Недостаточно точек: n={n}, для k={k} требуется минимум {k + 1}")


class DimensionMismatchError(DetectionError):
    """Размерность точки не совпадает с размерностью набора данных."""

    def __init__(self, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Несовпадение размерности: ожидалось {expected}, получено {actual}")


class InvalidParameterError(DetectionError):
    pass


class EngineStateError(RuntimeError):
    """Нарушен внутренний инвариант движка (ошибка реализации, не входных данных)."""
