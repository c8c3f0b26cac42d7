"""Scenario runner: config parsing, check kinds and the command line."""
