"""Seedable quantum-communication simulator: state math, noise, entanglement
protocols, optical link physics and repeater-network routing."""

__version__ = "0.1.0"
