"""Regenerates the scripted fixtures in this directory.

Run from the repository root:  python3 tests/fixtures/_generate.py
The outputs are committed; rerun only when the scenario changes.
"""

import json
from pathlib import Path

HERE = Path(__file__).parent

INTENT = ("I study backyard birds at a nature reserve and want a model that "
          "tells me which species appears in each trail camera photo.")

ANSWERS = [
    "Nine species; volunteers have labeled about 18,000 photos already.",
    "Trail cameras at 12 feeders, JPEG at 1920x1080, some infrared night shots.",
    "Training must finish overnight, photos stay on our network, and we want "
    "macro F1 of at least 0.85.",
    "Let's set up compute next. Everything runs on the reserve's workstation.",
    "One NVIDIA GPU with 24 GB of memory.",
    "About 500 GB of disk is free; we can spend up to 2,000 USD; we prefer PyTorch.",
]

PROBLEM_DEFINITION = {
    "domain": "field ornithology",
    "user_expertise": "intermediate",
    "task_type": "classification",
    "objective": ("Identify the bird species present in trail camera photos "
                  "from the reserve's 12 monitored feeders."),
    "data_description": {
        "modality": "image",
        "record_count": 18000,
        "feature_summary": "JPEG photos, 1920x1080, daylight and infrared night captures",
        "target_description": "one of 9 bird species labels assigned by volunteers",
    },
    "constraints": [
        "training must finish overnight (under 10 hours)",
        "no photos may leave the reserve network",
    ],
    "success_metrics": ["macro F1 of at least 0.85", "per-species recall reported"],
}

COMPUTE_SPEC = {
    "location": "on_premises",
    "accelerators": [{"kind": "gpu", "count": 1, "memory_gb": 24}],
    "storage_gb": 500,
    "budget": {"amount": 2000, "currency": "USD"},
    "preferred_ml_platform": "pytorch",
}

PREPROCESSING_PLAN = {
    "steps": [
        {
            "name": "resize_normalize",
            "description": ("Resize photos to 384x384 and normalize channels "
                            "with dataset statistics."),
            "rationale": ("Uniform tensor shape and stable input scale for "
                          "convolutional backbones."),
        },
        {
            "name": "augment",
            "description": ("Random horizontal flips, small rotations, and "
                            "brightness jitter on training images."),
            "rationale": ("Trail cameras vary in angle and lighting; "
                          "augmentation covers that variation."),
        },
        {
            "name": "stratified_split",
            "description": ("Split 80/10/10 into train, validation, and test "
                            "sets, stratified by species."),
            "rationale": "Preserves class balance so per-species recall is measurable.",
        },
    ],
}


def _candidate(index, name, description, family, procedure, pros, cons, refs):
    return {
        "index": index,
        "name": name,
        "description": description,
        "model_family": family,
        "training_procedure": procedure,
        "evaluation_metrics": ["macro_f1", "per_class_recall", "accuracy"],
        "pros": pros,
        "cons": cons,
        "preprocessing_refs": refs,
    }


PIPELINE_SET = {
    "candidates": [
        _candidate(
            1, "baseline_cnn",
            "A small convolutional network trained from scratch as a floor reference.",
            "convolutional network",
            "Train from random initialization for up to 30 epochs with early stopping.",
            ["fast to train on one GPU", "easy to audit end to end"],
            ["lower ceiling than pretrained backbones",
             "needs heavier augmentation to generalize"],
            ["resize_normalize", "augment", "stratified_split"],
        ),
        _candidate(
            2, "frozen_backbone",
            "A pretrained image backbone with only a new classification head trained.",
            "pretrained backbone, linear head",
            "Freeze the backbone, train the head for 10 epochs.",
            ["trains in minutes", "very low overfitting risk"],
            ["ceiling limited by frozen features", "night-shot domain gap remains"],
            ["resize_normalize", "stratified_split"],
        ),
        _candidate(
            3, "finetuned_backbone",
            "The same pretrained backbone fine-tuned end to end at a low learning rate.",
            "pretrained backbone, full fine-tune",
            "Unfreeze after one warmup epoch; cosine schedule for 20 epochs.",
            ["best expected accuracy", "adapts to infrared captures"],
            ["slowest option on a single GPU", "more sensitive to hyperparameters"],
            ["resize_normalize", "augment", "stratified_split"],
        ),
        _candidate(
            4, "distilled_mobile",
            "A compact student network distilled from the fine-tuned backbone.",
            "distilled mobile network",
            "Distill logits from candidate 3 for 15 epochs.",
            ["smallest deployable model", "fast inference on the workstation"],
            ["requires candidate 3 first", "small accuracy drop versus teacher"],
            ["resize_normalize", "augment", "stratified_split"],
        ),
        _candidate(
            5, "bagged_heads",
            "Five linear heads on frozen features, trained on bootstrap samples and averaged.",
            "pretrained backbone, bagged linear heads",
            "Train five heads on bootstrap resamples; average probabilities.",
            ["uncertainty estimates from head disagreement", "cheap to retrain"],
            ["inference does five head passes", "same frozen-feature ceiling as candidate 2"],
            ["resize_normalize", "stratified_split"],
        ),
    ],
}

TRAIN_OK = '''"""Nearest-centroid species classifier on synthetic stand-in features."""

import json
import random

random.seed(7)

SPECIES = ["cardinal", "chickadee", "goldfinch", "jay", "junco",
           "nuthatch", "sparrow", "titmouse", "woodpecker"]


def sample(label):
    center = float(SPECIES.index(label))
    return [center + random.gauss(0.0, 0.25) for _ in range(4)], label


def centroid(rows):
    return [sum(col) / len(rows) for col in zip(*rows)]


def main():
    train = [sample(s) for s in SPECIES for _ in range(40)]
    test = [sample(s) for s in SPECIES for _ in range(10)]
    centroids = {label: centroid([f for f, lab in train if lab == label])
                 for label in SPECIES}

    def predict(features):
        def gap(label):
            return sum((a - b) ** 2 for a, b in zip(features, centroids[label]))
        return min(SPECIES, key=gap)

    correct = sum(1 for features, label in test if predict(features) == label)
    accuracy = correct / len(test)
    print(json.dumps({"accuracy": accuracy, "n_test": len(test)}))
    if accuracy < 0.5:
        raise SystemExit("accuracy collapsed; check the feature generator")


if __name__ == "__main__":
    main()
'''

TRAIN_BROKEN = '''"""Training loop stub for the frozen-backbone candidate."""


def main():
    loss = 1.0
    for epoch in range(3):
        loss = loss * 0.5
        print("epoch", epoch, "loss", lose)


if __name__ == "__main__":
    main()
'''

TRAIN_FIXED = '''"""Training loop stub for the frozen-backbone candidate."""


def main():
    loss = 1.0
    for epoch in range(3):
        loss = loss * 0.5
        print("epoch", epoch, "loss", loss)


if __name__ == "__main__":
    main()
'''

TRAIN_STILL_BROKEN = '''"""Training loop stub for the frozen-backbone candidate."""


def main():
    loss = 1.0
    for epoch in range(3):
        loss = loss * 0.5
        print("epoch", epoch, "loss", los)


if __name__ == "__main__":
    main()
'''


def q(stage, message):
    return {"expect_stage": stage,
            "response": json.dumps({"status": "question", "message": message})}


def final(stage, message, payload):
    return {"expect_stage": stage,
            "response": json.dumps({"status": "final", "message": message,
                                    "payload": payload})}


DIALOGUE = [
    q("problem_definition",
      "How many species should the model distinguish, and are the photos labeled?"),
    q("problem_definition",
      "Where do the photos come from, and in what format and resolution?"),
    q("problem_definition",
      "Are there constraints on training time or data handling, and what does "
      "success look like?"),
    final("problem_definition",
          "Problem definition captured: 9-species image classification on "
          "labeled trail camera photos.", PROBLEM_DEFINITION),
    q("compute_spec", "What accelerator does the workstation have, if any?"),
    q("compute_spec", "How much storage is available, and is there a budget cap?"),
    final("compute_spec",
          "Compute environment captured: one on-premises 24 GB GPU workstation.",
          COMPUTE_SPEC),
    final("pipeline_generation",
          "Preprocessing plan: resize and normalize, augment, stratified split.",
          PREPROCESSING_PLAN),
    final("pipeline_generation",
          "Five candidate pipelines proposed, from a scratch baseline to a "
          "distilled deployment model.", PIPELINE_SET),
]

CODE_OK = final("code_generation",
                "Generated the training program for the baseline candidate.",
                {"files": [{"relative_path": "train.py", "content": TRAIN_OK}],
                 "entrypoint": "train.py"})

CODE_BROKEN = final("code_generation",
                    "Generated the training program for the frozen-backbone candidate.",
                    {"files": [{"relative_path": "train.py", "content": TRAIN_BROKEN}],
                     "entrypoint": "train.py"})

REPAIR_FIXED = final("code_generation",
                     "Replaced the undefined name with the tracked loss value.",
                     {"files": [{"relative_path": "train.py", "content": TRAIN_FIXED}],
                      "entrypoint": "train.py"})

REPAIR_STILL_BROKEN = {
    "response": json.dumps({
        "status": "final",
        "message": "Adjusted the print statement in the training loop.",
        "payload": {"files": [{"relative_path": "train.py",
                               "content": TRAIN_STILL_BROKEN}],
                    "entrypoint": "train.py"}})}


def write_json(name, data):
    (HERE / name).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def main():
    write_json("canonical_transcript.json", DIALOGUE + [CODE_OK])
    write_json("ui_transcript.json", DIALOGUE + [CODE_BROKEN, REPAIR_FIXED])
    # standalone sandbox fixtures: no stage pinning
    write_json("repair_fixed_transcript.json",
               [{"response": REPAIR_FIXED["response"]}])
    write_json("repair_failing_transcript.json", [REPAIR_STILL_BROKEN])
    write_json("code_passing.json", {
        "artifact_kind": "code_artifact", "schema_version": 1,
        "candidate_index": 1, "repair_count": 0, "platform": "pytorch",
        "files": [{"relative_path": "train.py", "content": TRAIN_OK}],
        "entrypoint": "train.py"})
    write_json("code_failing.json", {
        "artifact_kind": "code_artifact", "schema_version": 1,
        "candidate_index": 2, "repair_count": 0, "platform": "pytorch",
        "files": [{"relative_path": "train.py", "content": TRAIN_BROKEN}],
        "entrypoint": "train.py"})
    (HERE / "intent.txt").write_text(INTENT + "\n", encoding="utf-8")
    (HERE / "answers.txt").write_text("\n".join(ANSWERS) + "\n", encoding="utf-8")

    from ddap.agents.config import PIPELINE_DESIGNER
    from ddap.agents.prompts import render_prompt
    from ddap.agents.retrieval import Snippet
    from ddap.artifacts import (COMPUTE_SPEC as CS, PREPROCESSING_PLAN as PP,
                                PROBLEM_DEFINITION as PD, wrap_document)
    prompt = render_prompt(
        PIPELINE_DESIGNER,
        [wrap_document(PD, PROBLEM_DEFINITION),
         wrap_document(CS, COMPUTE_SPEC),
         wrap_document(PP, PREPROCESSING_PLAN)],
        [Snippet(source_id="s1", text="Stratified splits preserve class balance.",
                 score=2.0),
         Snippet(source_id="s2", text="Augmentation reduces overfitting on small "
                                      "image sets.", score=1.0)],
        [])
    (HERE / "golden_pipeline_prompt.txt").write_text(prompt, encoding="utf-8")
    print("fixtures written to", HERE)


if __name__ == "__main__":
    main()
