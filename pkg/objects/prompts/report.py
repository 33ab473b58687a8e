from typing import List

from weave import Prompt

from objects.datasets.vocabulary import Vocabulary
from objects.models.config import DEFAULT_PROMPT


class ReportPrompt(Prompt):
    """The fixed instruction placed between the visual prefix and the report."""
    template: str = DEFAULT_PROMPT

    def format(self, **kwargs) -> str:
        return self.template

    def token_ids(self, vocab: Vocabulary) -> List[int]:
        return vocab.encode(self.template)
