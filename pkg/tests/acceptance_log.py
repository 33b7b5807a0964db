"""Collects one summary line per acceptance criterion for the terminal report."""
LINES: list[str] = []


def record(number: int, passed: bool, detail: str) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {detail}"
    LINES.append(line)
    print(line)
    return line
