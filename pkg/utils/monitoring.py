"""Error monitoring with Sentry."""
import logging
import os
import sentry_sdk
from sentry_sdk.integrations.logging import LoggingIntegration

logger = logging.getLogger(__name__)

# tags copied from a run context onto every event
RUN_TAGS = ("algorithm", "graph_fingerprint", "n")


def setup_monitoring() -> bool:
    """
    Initialize Sentry for error monitoring.
    Only initializes if SENTRY_DSN environment variable is set.

    Returns:
        True when Sentry was initialized
    """
    sentry_dsn = os.getenv("SENTRY_DSN")

    if not sentry_dsn:
        logger.info("SENTRY_DSN not set, skipping error monitoring setup")
        return False

    sentry_sdk.init(
        dsn=sentry_dsn,
        traces_sample_rate=0.1,
        integrations=[
            LoggingIntegration(
                level=logging.INFO,  # breadcrumbs
                event_level=logging.ERROR
            ),
        ],
        environment=os.getenv("SENTRY_ENVIRONMENT", "development"),
        before_send=add_custom_context,
    )

    logger.info("Sentry monitoring initialized")
    return True


def add_custom_context(event, hint):
    """
    Promote run context fields to Sentry tags.

    Args:
        event: Sentry event dict
        hint: Additional context

    Returns:
        Modified event dict
    """
    run = event.get("contexts", {}).get("run")
    if isinstance(run, dict):
        tags = event.setdefault("tags", {})
        for key in RUN_TAGS:
            if key in run:
                tags[key] = str(run[key])
    return event


def capture_exception(error: Exception, context: dict = None):
    """
    Manually capture an exception with optional context.

    Args:
        error: Exception to capture
        context: Optional dict of additional context
    """
    if context:
        with sentry_sdk.push_scope() as scope:
            for key, value in context.items():
                scope.set_context(key, value)
            sentry_sdk.capture_exception(error)
    else:
        sentry_sdk.capture_exception(error)
