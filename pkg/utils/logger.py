import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

from config import settings

LOGGER_NAME = "ThetaWalks"


def configure_logging() -> logging.Logger:
	"""Configure the shared logger for the walk-ensemble engine.

	- Logs to standard error so that data written to stdout stays clean
	- Adds a rotating file (settings.LOG_FILE) when one is configured
	- Uses a structured, single-line formatter with ISO timestamps and file information
	"""
	logger = logging.getLogger(LOGGER_NAME)
	if logger.handlers:
		# Already configured
		return logger

	logger.setLevel(getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO))

	formatter = logging.Formatter(
		fmt="%(asctime)s [%(levelname)s] %(name)s - %(filename)s:%(lineno)d - %(message)s",
		datefmt="%Y-%m-%dT%H:%M:%S",
	)

	if settings.LOG_FILE:
		log_path = Path(settings.LOG_FILE).resolve()
		log_path.parent.mkdir(parents=True, exist_ok=True)
		file_handler = RotatingFileHandler(
			log_path,
			maxBytes=5 * 1024 * 1024,  # 5 MB
			backupCount=5,
			encoding="utf-8",
		)
		file_handler.setFormatter(formatter)
		logger.addHandler(file_handler)

	# Console handler, never stdout
	console_handler = logging.StreamHandler(sys.stderr)
	console_handler.setFormatter(formatter)
	logger.addHandler(console_handler)
	logger.propagate = False

	# Reduce noise from third-party libs if needed
	logging.getLogger("uvicorn").setLevel(logging.WARNING)
	logging.getLogger("uvicorn.error").setLevel(logging.WARNING)
	logging.getLogger("uvicorn.access").setLevel(logging.WARNING)

	return logger
