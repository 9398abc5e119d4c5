# src/errors.py - Exception hierarchy

class ProtocolSynthesisError(Exception):
    """Base class for every error raised by the synthesizer"""


class FormatError(ProtocolSynthesisError):
    """Malformed input text; carries the source name and line number"""

    def __init__(self, message, source='<string>', line=None):
        self.message = message
        self.source = source
        self.line = line
        location = source if line is None else f"{source}:{line}"
        super().__init__(f"{location}: {message}")


class UnknownStateError(ProtocolSynthesisError, KeyError):
    def __init__(self, automaton, state):
        self.automaton = automaton
        self.state = state
        super().__init__(f"automaton '{automaton}' has no state {state!r}")

    def __str__(self):
        return self.args[0]


class CompositionError(ProtocolSynthesisError):
    """Composition undefined, e.g. two components share an output event"""

    def __init__(self, message, events=()):
        self.events = tuple(sorted(events))
        super().__init__(message)


class ScenarioError(ProtocolSynthesisError):
    pass


class NondeterminismError(ProtocolSynthesisError):
    """Label merging produced a process automaton that is not deterministic"""

    def __init__(self, process, conflicts):
        self.process = process
        self.conflicts = tuple(conflicts)
        listing = '; '.join(
            ', '.join(f"{src} {event} {dst}" for src, event, dst in group)
            for group in self.conflicts
        )
        super().__init__(f"merging labels makes '{process}' non-deterministic: {listing}")


class ProfileError(ProtocolSynthesisError):
    pass


class ReductionError(ProtocolSynthesisError):
    pass


class ResourceExhausted(ProtocolSynthesisError):
    """A configured budget ran out before an answer was found"""


class BudgetExhausted(ResourceExhausted):
    def __init__(self, nodes, reason='node budget'):
        self.nodes = nodes
        self.reason = reason
        super().__init__(f"{reason} exhausted after {nodes} nodes")


class NodeCapExceeded(ResourceExhausted):
    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"BDD store is full: reached the node cap of {cap}")


class ProblemTooLarge(ResourceExhausted):
    pass
