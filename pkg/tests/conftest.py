RESULTS = []


def record(label, ok, detail=""):
    line = f"{label}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
    RESULTS.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
