import weave
from weave import Evaluation
from weave import Dataset
import asyncio
import os
import argparse
from pathlib import Path
from typing import Any, List, Dict

# Load environment variables first
from dotenv import load_dotenv
load_dotenv()

from objects.datasets.synth import load_manifest
from objects.scorers.rouge import Rouge1Scorer
from tools.report_writer import restore_generator


def parse_args():
    parser = argparse.ArgumentParser(description='Run a traced ROUGE-1 evaluation of a checkpoint')
    parser.add_argument('--checkpoint', type=str, required=True,
                       help='QBCK checkpoint written by train')
    parser.add_argument('--data', type=str, required=True,
                       help='Corpus directory written by gen-data')
    parser.add_argument('--split', type=str, default='val', choices=['val', 'test'],
                       help='Split to evaluate (default: val)')
    parser.add_argument('--trials', type=int, default=1,
                       help='Number of trials to run (default: 1)')
    parser.add_argument('--first-n', type=int,
                       help='Only evaluate on first N examples')
    parser.add_argument('--ids', type=int, nargs='+',
                       help='Only evaluate on samples with these corpus indices')
    return parser.parse_args()


def load_dataset(data_dir: str, split: str) -> List[Dict]:
    """Split manifest rows as evaluation examples."""
    root = Path(data_dir)
    return [
        {
            'id': record.index,
            'image_path': str(root / record.image_path),
            'target': {'caption': record.caption},
        }
        for record in load_manifest(data_dir, split)
    ]


def filter_dataset(examples: List[Dict], first_n: int = None, ids: List[int] = None) -> List[Dict]:
    """Filter dataset based on provided criteria."""
    if first_n is not None:
        return examples[:first_n]
    elif ids is not None:
        return [ex for ex in examples if ex['id'] in set(ids)]
    return examples


@weave.op(name="report_generator-preprocess_model_input")
def preprocess_model_input(example: Dict[str, Any]) -> Dict[str, Any]:
    return {
        'image_path': example['image_path']
    }


async def main():
    client = weave.init(f'{os.getenv("WEAVE_TEAM")}/{os.getenv("WEAVE_PROJECT")}')

    args = parse_args()

    dataset_name = f"MedcapSynthetic{args.split.capitalize()}"
    if args.first_n:
        dataset_name += f"-first{args.first_n}"
    elif args.ids:
        dataset_name += f"-ids{'_'.join(str(i) for i in args.ids)}"

    examples = filter_dataset(load_dataset(args.data, args.split), args.first_n, args.ids)
    dataset = Dataset(name=dataset_name, rows=examples)

    generator, run_config = restore_generator(args.checkpoint, args.data)
    rouge_scorer = Rouge1Scorer(column_map={"target": "target"})

    evaluation = Evaluation(
        name="MedcapReportEvaluation",
        dataset=dataset,
        preprocess_model_input=preprocess_model_input,
        scorers=[
            rouge_scorer
        ],
        trials=args.trials,
    )

    display_name = (
        f"Medcap.{run_config.ablation.vision_label}.{run_config.ablation.language_label}"
        f".{run_config.ablation.image_size}px.{args.split}.{args.trials}"
    )
    if args.first_n:
        display_name += f".first{args.first_n}"

    await evaluation.evaluate(generator, __weave={"display_name": display_name})
    client.finish()

if __name__ == "__main__":
    asyncio.run(main())
