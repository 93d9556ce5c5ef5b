"""Tests for Sentry monitoring helpers."""
from utils.monitoring import add_custom_context, capture_exception, setup_monitoring


def test_setup_skipped_without_dsn(monkeypatch, mocker):
    """Test Sentry is not initialized when SENTRY_DSN is unset."""
    monkeypatch.delenv("SENTRY_DSN", raising=False)
    init = mocker.patch("utils.monitoring.sentry_sdk.init")
    assert setup_monitoring() is False
    init.assert_not_called()


def test_setup_with_dsn(monkeypatch, mocker):
    """Test Sentry is initialized with the environment name."""
    monkeypatch.setenv("SENTRY_DSN", "https://key@example.invalid/1")
    monkeypatch.setenv("SENTRY_ENVIRONMENT", "ci")
    init = mocker.patch("utils.monitoring.sentry_sdk.init")
    assert setup_monitoring() is True
    kwargs = init.call_args.kwargs
    assert kwargs["environment"] == "ci"
    assert kwargs["before_send"] is add_custom_context


def test_add_custom_context_promotes_run_tags():
    """Test run context fields become string tags."""
    event = {"contexts": {"run": {"algorithm": "ksp", "n": 4, "seed": 1}}}
    result = add_custom_context(event, None)
    assert result["tags"] == {"algorithm": "ksp", "n": "4"}


def test_add_custom_context_without_run():
    """Test events without run context pass through."""
    event = {"message": "hello"}
    assert add_custom_context(event, None) == {"message": "hello"}


def test_capture_exception_with_context(mocker):
    """Test context is attached to a pushed scope."""
    push_scope = mocker.patch("utils.monitoring.sentry_sdk.push_scope")
    capture = mocker.patch("utils.monitoring.sentry_sdk.capture_exception")
    error = RuntimeError("boom")

    capture_exception(error, {"run": {"algorithm": "csssp"}})

    scope = push_scope.return_value.__enter__.return_value
    scope.set_context.assert_called_once_with("run", {"algorithm": "csssp"})
    capture.assert_called_once_with(error)


def test_capture_exception_without_context(mocker):
    """Test plain capture skips the scope."""
    push_scope = mocker.patch("utils.monitoring.sentry_sdk.push_scope")
    capture = mocker.patch("utils.monitoring.sentry_sdk.capture_exception")
    error = RuntimeError("boom")

    capture_exception(error)

    push_scope.assert_not_called()
    capture.assert_called_once_with(error)
