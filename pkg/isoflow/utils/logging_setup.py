import logging

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(level: str = "INFO") -> logging.Logger:
    """Configure root logging once and return the package logger"""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT,
    )
    logger = logging.getLogger("isoflow")
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    return logger
