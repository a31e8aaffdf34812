import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

from rankforge.core.config import settings


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None):
    """Setup logging configuration."""
    level = level or settings.LOG_LEVEL
    log_file = log_file or settings.LOG_FILE

    handlers = [logging.StreamHandler()]
    if log_file:
        # Create logs directory if it doesn't exist
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        handlers.append(
            RotatingFileHandler(
                log_file,
                maxBytes=10*1024*1024,  # 10MB
                backupCount=5
            )
        )

    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True
    )


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance with the specified name."""
    return logging.getLogger(name)
