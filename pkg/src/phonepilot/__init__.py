"""phonepilot: a hierarchical multi-agent phone GUI automation framework
with a self-evolving long-term memory of tips and shortcut macros, a
deterministic simulated phone, and a benchmark evaluation harness."""

__version__ = "0.1.0"
