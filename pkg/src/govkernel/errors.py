"""Exception hierarchy shared across the kernel."""


class GovKernelError(Exception):
    """Base class for all kernel errors."""


class ScenarioError(GovKernelError):
    """A scenario document failed validation.

    ``path`` names the offending field, e.g. ``automaton.nodes.n0.actions[1].branches``.
    """

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class UnlabeledTransitionError(GovKernelError):
    """A transition was presented without an action label."""


class ComparisonError(GovKernelError):
    """Two trace sets were built over incompatible alphabets."""


class ResourceBudgetError(GovKernelError):
    """Enumeration exceeded its configured strategy or tree-node budget."""


class AdjudicationError(GovKernelError):
    """The membrane could not adjudicate (e.g. unknown policy version)."""


class LedgerError(GovKernelError):
    """Base class for witness-ledger failures."""


class OutOfBandAppend(LedgerError):
    """An append was attempted outside the executor's commit point."""


class ReplayUnavailable(LedgerError):
    """Replay inputs (policy version or context) are missing."""


class ReplayMismatch(LedgerError):
    """Replayed decision differs from the stored one."""

    def __init__(self, seq, stored, replayed):
        super().__init__(f"seq {seq}: stored {stored}, replayed {replayed}")
        self.seq = seq
        self.stored = stored
        self.replayed = replayed
