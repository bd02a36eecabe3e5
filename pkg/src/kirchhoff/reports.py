from dataclasses import dataclass, field


@dataclass
class PropertyReport:
    """Named empirical quantities plus the pass/fail status of derived checks."""

    values: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return all(self.checks.values())

    def __getitem__(self, key):
        return self.values[key]

    def summary(self):
        lines = [f"{k}: {v:.6g}" for k, v in self.values.items()]
        lines += [f"[{'PASS' if ok else 'FAIL'}] {k}" for k, ok in self.checks.items()]
        return "\n".join(lines + self.notes)
