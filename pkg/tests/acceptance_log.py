"""Collects one result line per acceptance criterion for the terminal summary."""
RESULTS: dict[int, str] = {}


def record(number: int, passed: bool | None, detail: str) -> str:
    status = {True: "PASS", False: "FAIL", None: "NOT EVALUATED"}[passed]
    line = f"criterion {number}: {status} - {detail}"
    RESULTS[number] = line
    print(line)
    return line
