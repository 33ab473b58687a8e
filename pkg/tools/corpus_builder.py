import weave
from typing import Any, Dict, Optional

from objects.datasets.synth import SynthSpec, generate_corpus
from objects.errors import MedcapError
from tools.return_type import ToolResult

CORPUS_BUILDER_TOOLS = {
    "gen_data": {
        "type": "function",
        "function": {
            "name": "corpus_builder-gen_data",
            "description": """Renders the synthetic image/caption corpus. Writes:
            - images/NNNNN.pgm (binary graymaps)
            - manifest.tsv and train/val/test.tsv (index<TAB>image_path<TAB>caption)
            - vocab.txt and the synth_spec.txt that produced it
            """,
            "parameters": {
                "type": "object",
                "properties": {
                    "spec": {
                        "type": "string",
                        "description": "Path to a key=value corpus spec (defaults apply when omitted)"
                    },
                    "out": {
                        "type": "string",
                        "description": "Output directory"
                    },
                    "seed": {
                        "type": "integer",
                        "description": "Overrides the spec's seed"
                    },
                    "workers": {
                        "type": "integer",
                        "description": "Threads used to render samples"
                    }
                },
                "required": ["out"]
            }
        }
    }
}


@weave.op(name="corpus_builder-gen_data")
def gen_data(*, out: str, spec: Optional[str] = None, seed: Optional[int] = None, workers: int = 1) -> ToolResult[Dict[str, Any]]:
    """
    Generate the synthetic corpus described by `spec` into `out`.

    Returns:
        Sample and split counts plus the vocabulary size
    """
    try:
        synth_spec = SynthSpec.from_file(spec) if spec else SynthSpec()
        if seed is not None:
            synth_spec = synth_spec.replace(seed=seed)
        summary = generate_corpus(synth_spec, out, workers=workers or 1)
        print(f"Wrote {summary['samples']} samples to {out} (vocabulary {summary['vocab_size']} tokens)")
        return ToolResult.ok(summary)
    except MedcapError as e:
        return ToolResult.from_error(e)
    except Exception as e:
        return ToolResult.err(f"Failed to generate corpus: {str(e)}")
