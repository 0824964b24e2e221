import logging.config

from decouple import config

ENVIRONMENT = config("ENVIRONMENT", default="development")
IN_DEV = ENVIRONMENT == "development"
IN_PROD = ENVIRONMENT == "production"

DEBUG = config("DEBUG", default=False, cast=bool)

LOG_LEVEL = config("LOG_LEVEL", default="INFO")

#
# Fitting defaults
#
# Fixed seed so every subcommand is reproducible when --seed is not given
DEFAULT_SEED = config("PHFIT_DEFAULT_SEED", default=20240611, cast=int)
WORKERS = config("PHFIT_WORKERS", default=1, cast=int)
LOG_EVERY = config("PHFIT_LOG_EVERY", default=500, cast=int)


LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "%(asctime)s %(levelname)s %(name)s:%(funcName)s:%(lineno)s %(message)s",
            "datefmt": "%d/%b/%Y %H:%M:%S",
        },
        "progress": {
            "format": "%(message)s",
        },
    },
    "handlers": {
        "console": {
            "level": "DEBUG",
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "formatter": "verbose",
        },
        "progress": {
            "level": "INFO",
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "formatter": "progress",
        },
    },
    "loggers": {
        # The logger name matters -- it MUST match the name of the package
        "phfit": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
        "phfit.progress": {
            "handlers": ["progress"],
            "level": "INFO",
            "propagate": False,
        },
    },
}

#
# Rollbar logging config
#
ROLLBAR_ACCESS_TOKEN = config("ROLLBAR_ACCESS_TOKEN", default="")

if IN_PROD or ROLLBAR_ACCESS_TOKEN:
    ROLLBAR = {
        "access_token": ROLLBAR_ACCESS_TOKEN,
        "environment": ENVIRONMENT,
    }
    LOGGING["handlers"].update(
        {
            "rollbar": {
                "level": "WARNING",
                "access_token": ROLLBAR_ACCESS_TOKEN,
                "environment": ENVIRONMENT,
                "class": "rollbar.logger.RollbarHandler",
            }
        }
    )
    LOGGING["loggers"]["phfit"]["handlers"].append("rollbar")


def configure_logging(level: str | None = None) -> None:
    """Apply LOGGING, optionally overriding the package log level."""
    if level:
        LOGGING["loggers"]["phfit"]["level"] = level.upper()
    logging.config.dictConfig(LOGGING)
