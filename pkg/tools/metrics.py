import weave
from pathlib import Path
from typing import Any, Dict, List, Optional

from objects.errors import DataError, MedcapError
from objects.scorers.frequency import token_frequency_report
from objects.scorers.rouge import corpus_rouge1
from tools.return_type import ToolResult

METRICS_TOOLS = {
    "evaluate": {
        "type": "function",
        "function": {
            "name": "metrics-evaluate",
            "description": """Corpus ROUGE-1 of generated reports against references.
            Both files hold one report per line, aligned by line number; a split manifest
            (index<TAB>image_path<TAB>caption) is accepted as the reference file.
            """,
            "parameters": {
                "type": "object",
                "properties": {
                    "pred": {"type": "string", "description": "Generated reports"},
                    "ref": {"type": "string", "description": "Reference reports or a split manifest"}
                },
                "required": ["pred", "ref"]
            }
        }
    },
    "freq_report": {
        "type": "function",
        "function": {
            "name": "metrics-freq_report",
            "description": "Ranked token frequencies of a text file (one report per line).",
            "parameters": {
                "type": "object",
                "properties": {
                    "texts": {"type": "string", "description": "Text file, one report per line"},
                    "top": {"type": "integer", "default": 20, "description": "Number of tokens to list"},
                    "stopwords": {"type": "string", "description": "Optional file of stopwords, one per line"}
                },
                "required": ["texts"]
            }
        }
    }
}


def read_lines(path: str) -> List[str]:
    """One text per line; manifest rows contribute their caption column."""
    try:
        with open(path, encoding="utf-8") as f:
            lines = [line.rstrip("\n") for line in f]
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    return [line.split("\t")[2] if line.count("\t") == 2 else line for line in lines]


@weave.op(name="metrics-evaluate")
def evaluate(*, pred: str, ref: str) -> ToolResult[Dict[str, Any]]:
    """
    Score aligned prediction/reference files with ROUGE-1.

    Returns:
        Mean F1, precision and recall plus the pair count
    """
    try:
        predictions, references = read_lines(pred), read_lines(ref)
        if len(predictions) != len(references):
            raise DataError(f"{pred} has {len(predictions)} lines but {ref} has {len(references)}")
        summary = corpus_rouge1(list(zip(predictions, references)))
        print("metric\tvalue")
        print(f"rouge1_f1\t{summary['rouge1_f1']:.6f}")
        print(f"rouge1_precision\t{summary['rouge1_precision']:.6f}")
        print(f"rouge1_recall\t{summary['rouge1_recall']:.6f}")
        print("bertscore\tn/a")
        print(f"count\t{summary['count']}")
        return ToolResult.ok(summary)
    except MedcapError as e:
        return ToolResult.from_error(e)
    except Exception as e:
        return ToolResult.err(f"Failed to evaluate: {str(e)}")


@weave.op(name="metrics-freq_report")
def freq_report(*, texts: str, top: int = 20, stopwords: Optional[str] = None) -> ToolResult[Dict[str, Any]]:
    """
    Count tokens across a file of reports.

    Returns:
        The ranked (token, count) list
    """
    try:
        stop = set(read_lines(stopwords)) if stopwords else set()
        ranked = token_frequency_report(read_lines(texts), top, stop)
        print("token\tcount")
        for token, count in ranked:
            print(f"{token}\t{count}")
        return ToolResult.ok({"tokens": [[token, count] for token, count in ranked]})
    except MedcapError as e:
        return ToolResult.from_error(e)
    except Exception as e:
        return ToolResult.err(f"Failed to build frequency report: {str(e)}")
