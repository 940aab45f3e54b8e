import click

from .data import commands as data_commands
from .diagnostics import commands as diagnostics_commands
from .training import commands as training_commands


def register(group: click.Group) -> click.Group:
    """Attach every subcommand to the root group."""
    for command in (*data_commands, *training_commands, *diagnostics_commands):
        group.add_command(command)
    return group
