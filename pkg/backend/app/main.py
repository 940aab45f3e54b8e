import click

from app.core.config import settings
from app.core.errors import NCFError
from app.core.logger import set_level
from app.routes import register


class NCFGroup(click.Group):
    """Root group: library errors become ``error: ...`` and their exit code."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except NCFError as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(exc.exit_code)


@click.group(cls=NCFGroup)
@click.option("--quiet", is_flag=True, help="warnings only, no progress bars")
@click.option("--log-level", default=None, help=f"overrides NCF_LOG_LEVEL ({settings.NCF_LOG_LEVEL})")
@click.pass_context
def cli(ctx, quiet, log_level):
    """Collaborative-filtering trainer with cost-aware mini-batch samplers."""
    ctx.ensure_object(dict)
    ctx.obj["quiet"] = quiet
    set_level("WARNING" if quiet else (log_level or settings.NCF_LOG_LEVEL))


register(cli)


def main():
    cli(obj={})


if __name__ == "__main__":
    main()
