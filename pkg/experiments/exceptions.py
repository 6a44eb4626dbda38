# experiments/exceptions.py
from detection.exceptions import DetectionError


class PlanValidationError(DetectionError):
    """План эксперимента или флаги команды не прошли проверку."""

    def __init__(self, errors):
        self.errors = errors
        if isinstance(errors, dict):
            message = "; ".join(f"{field}: {', '.join(str(m) for m in messages)}" for field, messages in errors.items())
        else:
            message = str(errors)
        super().__init__(f"Некорректный план: {message}")


class CsvFormatError(DetectionError):
    """Ошибка разбора CSV с указанием строки и столбца."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"строка {row}")
        if column is not None:
            location.append(f"столбец {column!r}")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")


class InsufficientRowsError(DetectionError):
    pass
