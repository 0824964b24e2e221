import functools
import logging

import rollbar

from phfit import settings

logger = logging.getLogger(__name__)


def log_errors(fn):
    """
    Decorator to log errors and report to Rollbar.
    The exception is always re-raised so callers can map it to an exit code.
    """

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as e:
            logger.exception(f"Error in {fn.__qualname__}: {e}")
            if settings.ROLLBAR_ACCESS_TOKEN:
                rollbar.report_exc_info()
            raise

    return wrapper
