"""Shared record of acceptance outcomes, printed at the end of the run."""

LINES = []


def report(number, title, passed, detail):
    line = f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    LINES.append(line)
    print(line)
    return passed
