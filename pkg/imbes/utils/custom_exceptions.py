from .logger import logger


class BaseCustomException(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ParseError(BaseCustomException):
    def __init__(self, reason: str, position: int | None = None):
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"Failed to parse input{where}: {reason}")
        self.reason = reason
        self.position = position


class SequentError(BaseCustomException):
    def __init__(self, reason: str):
        super().__init__(f"Ill-formed sequent: {reason}")


class MalformedProofError(BaseCustomException):
    def __init__(self, reason: str):
        super().__init__(f"Malformed proof object: {reason}")


class ProofCheckError(BaseCustomException):
    def __init__(self, reason: str, path: tuple = ()):
        location = "/".join(str(step) for step in path) or "root"
        super().__init__(f"Proof rejected at node {location}: {reason}")
        self.reason = reason
        self.path = path


class BaseFormatError(BaseCustomException):
    def __init__(self, reason: str):
        super().__init__(f"Failed to read base: {reason}")


class ExtractionError(BaseCustomException):
    def __init__(self, reason: str):
        super().__init__(f"Failed to extract natural deduction proof: {reason}")


class ConfigError(BaseCustomException):
    def __init__(self, reason: str):
        super().__init__(f"Invalid configuration: {reason}")


class ExceptionHandler:
    raise_exception = True

    @staticmethod
    def initialize(raise_exception: bool) -> None:
        ExceptionHandler.raise_exception = raise_exception

    @staticmethod
    def raise_exception_or_log(custom_exception: BaseCustomException) -> None:
        if ExceptionHandler.raise_exception:
            raise custom_exception
        logger.error(str(custom_exception))
