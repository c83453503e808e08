from pathlib import Path
from typing import Dict, List

import jinja2

from deig.config.constants import PROMPTS_PATH
from deig.core.commons.errors import ContractViolation

TEMPLATE_SUFFIX = ".jinja"


class CaptionTemplates:
    """
    Caption realisation templates, one ``<name>.jinja`` per caption form.

    Every template of the folder is compiled up front, so a broken template
    fails at construction rather than halfway through a bench run. Rendered
    captions are collapsed to one line with single spaces, which is the form
    the tokenizer and ``parse_caption`` expect.

        templates = CaptionTemplates("captions")
        templates.render("object", color="red", texture=None, material="glass", noun="cup")
        # "a red glass cup"
    """

    def __init__(self, subfolder: str = "captions", root_path: Path = PROMPTS_PATH):
        folder = Path(root_path) / subfolder
        if not folder.is_dir():
            raise ContractViolation(f"Template folder {folder} does not exist")
        env = jinja2.Environment(
            loader=jinja2.FileSystemLoader(folder),
            trim_blocks=True,
            lstrip_blocks=True,
            undefined=jinja2.StrictUndefined,
            autoescape=False,
        )
        self.folder = folder
        self._templates: Dict[str, jinja2.Template] = {
            name[: -len(TEMPLATE_SUFFIX)]: env.get_template(name)
            for name in env.list_templates(extensions=[TEMPLATE_SUFFIX.lstrip(".")])
        }

    @property
    def names(self) -> List[str]:
        return sorted(self._templates)

    def __getattr__(self, name: str) -> jinja2.Template:
        templates = self.__dict__.get("_templates", {})
        if name not in templates:
            raise AttributeError(f"No caption template {name!r} in {self.__dict__.get('folder')}")
        return templates[name]

    def render(self, name: str, **fields) -> str:
        """
        Raises:
            AttributeError: If there is no such template
            ContractViolation: If a field the template uses is missing
        """
        try:
            text = getattr(self, name).render(**fields)
        except jinja2.UndefinedError as e:
            raise ContractViolation(f"Caption template {name!r}: {e.message}") from e
        return " ".join(text.split())
