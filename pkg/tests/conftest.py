import acceptance_log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print the acceptance checklist where capture cannot swallow it."""
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
