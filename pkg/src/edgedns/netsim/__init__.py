"""Discrete-event user-plane simulator."""

from .core import MS, SECOND, LinkSpec, Node, NodeSpec, RunResult, SimEvent, Simulator, Topology

__all__ = ["MS", "SECOND", "LinkSpec", "Node", "NodeSpec", "RunResult", "SimEvent", "Simulator", "Topology"]
