#!/usr/bin/env python3
"""Regenerates the 20-chart mock fixture.

usage: generate.py <path to chartforge-stub-worker>

Seed images are rendered by the stub worker so that a sampled program using
the same directives reproduces a seed image byte for byte.
"""
import base64
import json
import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent

HARD = range(1, 9)      # eight distinct reconstructions
EASY = range(9, 13)     # eight identical reconstructions
SENTINEL = (13, 14)     # every reconstruction fails
FEW = (15, 16)          # two of eight succeed
THREE = (17,)           # three distinct, five fail
NOCODE = (18,)          # five distinct, three replies without code
PAIRED = (19, 20)       # four distinct programs, each twice


def seed_code(i):
    r, g, b = (37 * i) % 256, (91 * i + 40) % 256, (53 * i + 90) % 256
    return (
        "import matplotlib.pyplot as plt\n"
        f"# stub: color {r} {g} {b}\n"
        f"# stub: label <c{i:02d}>\n"
        "plt.savefig('image.png')\n"
    )


def render(worker, code):
    req = {"task_id": "gen", "kind": "render", "code": code, "timeout_s": 10}
    out = subprocess.run([worker], input=json.dumps(req) + "\n", capture_output=True, text=True, check=True)
    reply = json.loads(out.stdout.splitlines()[0])
    assert reply["status"] == "ok", reply
    return base64.b64decode(reply["artifact_b64"])


def program(body, label):
    return (
        "```python\nimport matplotlib.pyplot as plt\n"
        f"{body}\nplt.savefig('image.png')\n# stub: label {label}\n```"
    )


FAILING = "```python\nimport matplotlib.pyplot as plt\n# stub: fail cannot reproduce\nplt.savefig('image.png')\n```"


def rollout_texts(i):
    def distinct(j):
        return program(f"# reconstruction {i}-{j}", f"<k{i:02d}-{j}>")

    if i in HARD:
        return [distinct(j) for j in range(8)]
    if i in EASY:
        return [distinct(0)] * 8
    if i in SENTINEL:
        return [FAILING] * 8
    if i in FEW:
        return [distinct(0), distinct(1)] + [FAILING] * 6
    if i in THREE:
        return [distinct(0), distinct(1), distinct(2)] + [FAILING] * 5
    if i in NOCODE:
        return [distinct(j) for j in range(5)] + ["I am unable to reproduce this chart."] * 3
    return [distinct(j % 4) for j in range(8)]


def think(words, tag):
    verbs = ["read", "compare", "measure", "check", "note", "sum", "order", "trace"]
    nouns = ["axis", "bar", "legend", "series", "tick", "label", "panel", "marker"]
    out = []
    for k in range(words):
        out.append(f"{verbs[k % 8]}-{nouns[(k // 8) % 8]}-{tag}{k}")
    return " ".join(out)


def repeated_block(tag):
    block = " ".join(f"loop{tag}{k}" for k in range(50))
    return " ".join([block] * 3)


def main():
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    worker = sys.argv[1]
    images = HERE / "images"
    images.mkdir(exist_ok=True)
    corpus = []
    for i in range(1, 21):
        png = render(worker, seed_code(i))
        (images / f"c{i:02d}.png").write_bytes(png)
        corpus.append({"image": f"images/c{i:02d}.png"})
    (HERE / "corpus.jsonl").write_text("".join(json.dumps(row) + "\n" for row in corpus))

    scripts = HERE / "scripts"
    scripts.mkdir(exist_ok=True)

    def dump(name, rules):
        (scripts / name).write_text(json.dumps(rules, indent=1) + "\n")

    rollout = [{"match": {"substring": f"<c{i:02d}>"}, "respond": {"texts": rollout_texts(i)}} for i in range(1, 21)]
    rollout += [
        {
            "match": {"regex": "<s(-?\\d+)>"},
            "respond": {
                "select": "seed",
                "texts": [
                    program("# reconstruction {1}-{n}", "<r{1}-{n}>"),
                    program("# reconstruction {1}-{n}", "<r{1}-{n}>"),
                    FAILING,
                ],
            },
        },
        {"match": {"regex": "<e(-?\\d+)>"}, "respond": {"texts": [program("# reconstruction {1}", "<q{1}>")]}},
    ]
    dump("rollout.json", rollout)
    dump("embedding.json", [])

    dump(
        "codegen.json",
        [
            {
                "match": {"regex": "<c(\\d+)>"},
                "respond": {
                    "select": "seed",
                    "texts": [
                        program("# cold-start program for chart {1}", "<d{1}>"),
                        program("# cold-start program for chart {1}", "<d{1}>"),
                        program("# cold-start program for chart {1}", "<d{1}>"),
                        FAILING,
                    ],
                },
            }
        ],
    )

    twin = "```python\n" + seed_code(1) + "```"
    coder_texts = [
        program("# synthetic chart {seed}", "<s{seed}>"),
        program("# synthetic chart {seed}", "<s{seed}>"),
        program("# synthetic chart {seed}", "<s{seed}>"),
        program("# synthetic chart {seed}\n# flat variant", "<e{seed}>"),
        twin,
        "Here is a description of a chart without any code.",
        FAILING,
    ]
    for name in ("coder1.json", "coder2.json", "coder_syn.json"):
        dump(name, [{"respond": {"select": "seed", "texts": coder_texts}}])

    script = "<answer>\n```python\n# derive a value from chart {1}\nprint('ANS{1}x{seed}')\n```\n</answer>"
    dump(
        "qa.json",
        [
            {
                "match": {"regex": "QID:(\\S+) asks"},
                "respond": {
                    "select": "seed",
                    "texts": [
                        *["Reading the chart gives the value.\n<answer>{1}</answer>"] * 6,
                        "I estimate a different value.\n<answer>ANS0</answer>",
                    ],
                },
            },
            {
                "match": {"regex": "print\\('(ANS[^']*)'\\)"},
                "respond": {
                    "select": "seed",
                    "texts": [
                        *["<question>QID:{1} asks which value the chart encodes.</question>"] * 7,
                        "The question would be about the legend.",
                    ],
                },
            },
            {
                "match": {"regex": "# synthetic chart (-?\\d+)"},
                "respond": {
                    "select": "seed",
                    "texts": [
                        *[script] * 7,
                        "<answer>\n```python\n# stub: fail division by zero\nprint('x')\n```\n</answer>",
                        "A script is not needed here.",
                    ],
                },
            },
        ],
    )

    good = "<think>\n" + think(120, "g") + "\n</think>\nTherefore, the final answer is <answer>{1}</answer>"
    wrong = "<think>\n" + think(120, "w") + "\n</think>\nTherefore, the final answer is <answer>ANS0</answer>"
    loop = "<think>\n" + repeated_block("r") + "\n</think>\nTherefore, the final answer is <answer>{1}</answer>"
    short = "<think>\n" + think(30, "s") + "\n</think>\nTherefore, the final answer is <answer>{1}</answer>"
    untagged = "<think>\n" + think(120, "u") + "\n</think>\nI could not decide."
    dump(
        "distill.json",
        [
            {
                "match": {"regex": "QID:(\\S+) asks"},
                "respond": {"select": "seed", "texts": [good, wrong, good, loop, wrong, short, untagged, good]},
            }
        ],
    )

    def endpoint(script_name, **extra):
        e = {"base_url": f"mock:scripts/{script_name}", "model_id": script_name.split(".")[0], "max_parallel": 4,
             "retry": {"max_attempts": 2, "base_backoff_ms": 1, "max_backoff_ms": 2},
             "mock_call_log": f"calls/{script_name.split('.')[0]}.log"}
        e.update(extra)
        return e

    manifest = {
        "description": "20-chart fixture served entirely by scripted mock endpoints",
        "seed": 20240601,
        "output_dir": "out",
        "worker_pool": 4,
        "max_parallel": 4,
        "canonical_ledger": True,
        "endpoints": {
            "rollout": endpoint("rollout.json"),
            "embedding": endpoint("embedding.json", mock_dim=64, embed_batch_size=16),
            "codegen": endpoint("codegen.json"),
            "coder1": endpoint("coder1.json"),
            "coder2": endpoint("coder2.json"),
            "coder_syn": endpoint("coder_syn.json"),
            "qa": endpoint("qa.json"),
            "distill": endpoint("distill.json"),
        },
        "roles": {
            "rollout": "rollout",
            "embedding": "embedding",
            "codegen": "codegen",
            "coder": ["coder1", "coder2"],
            "synth_coder": "coder_syn",
            "qa": "qa",
            "distill": "distill",
        },
        "scoring": {"rollouts": 8, "render_timeout_s": 10},
        "stages": [
            {"name": "score", "input": "corpus.jsonl"},
            {"name": "filter-hard", "rpe_threshold": 0.2},
            {"name": "cold-start"},
            {"name": "self-enhance", "iterations": 2, "samples_per_iteration": 8, "rpe_threshold": 0.2,
             "sim_limit": 0.65},
            {"name": "synth", "samples": 16, "rpe_threshold": 0.2},
            {"name": "qa-synth", "scripts_per_chart": 2, "script_timeout_s": 10},
            {"name": "cot-distill", "traces": 3},
            {"name": "cot-filter"},
            {"name": "bucket", "rl_quota": 3},
            {"name": "diagnose", "sample_size": 1000},
        ],
    }
    (HERE / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
