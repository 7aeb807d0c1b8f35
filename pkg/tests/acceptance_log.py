"""One pass/fail line per acceptance criterion, shared with the pytest summary hook."""

LINES: list[str] = []


def verdict(criterion: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    LINES.append(line)
    print(line)
    return ok


def skipped(criterion: str, detail: str) -> None:
    line = f"[SKIP] {criterion}: {detail}"
    LINES.append(line)
    print(line)
