#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0.txt
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
#

from typing import Iterable, Optional

import click
from click.core import ParameterSource


class MutuallyExclusiveOption(click.Option):
    """
    A click option which may not be given on the command line together with the options named in
    mutually_exclusive.

    Only command line usage is checked. Values supplied through the context's default_map (the --config file)
    rank below any option given explicitly, so a flag for one member of the group overrides a config value for another.
    """

    def __init__(self, *args, **kwargs):
        self.mutually_exclusive = frozenset(kwargs.pop("mutually_exclusive", ()))
        help_text = kwargs.get("help", "")
        if self.mutually_exclusive:
            names = ", ".join(f"--{name.replace('_', '-')}" for name in sorted(self.mutually_exclusive))
            kwargs["help"] = f"{help_text} Mutually exclusive with {names}.".strip()
        super().__init__(*args, **kwargs)

    def handle_parse_result(self, ctx, opts, args):
        conflicts = sorted(self.mutually_exclusive.intersection(opts))
        if conflicts and self.name in opts:
            flags = ", ".join(f"--{name.replace('_', '-')}" for name in conflicts)
            raise click.UsageError(f"--{self.name.replace('_', '-')} may not be combined with {flags}.", ctx=ctx)
        return super().handle_parse_result(ctx, opts, args)


def explicit_choice(ctx: click.Context, names: Iterable[str]) -> Optional[str]:
    """
    The member of a mutually exclusive group that was set with the highest precedence: command line first, then the
    config file. Returns None when every member still holds its default.
    """
    names = list(names)
    for source in (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT, ParameterSource.DEFAULT_MAP):
        for name in names:
            if ctx.get_parameter_source(name) == source and ctx.params.get(name) is not None:
                return name
    return None
