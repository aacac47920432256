"""On-disk layout of a finished run."""
from __future__ import annotations

import json
import os


def write_archive(result, out_dir):
    """prompts/NN.txt, responses/NN.txt, candidates/NN_k.mdl, fits.jsonl, report.json.

    Retried attempts of an iteration get an ``_rR`` suffix; the final attempt
    keeps the plain name.
    """
    for sub in ("prompts", "responses", "candidates"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    for it in result.iterations:
        nn = f"{it.iteration:02d}"
        n = len(it.prompts)
        for r, (p, resp) in enumerate(zip(it.prompts, it.responses)):
            stem = nn if r == n - 1 else f"{nn}_r{r}"
            with open(os.path.join(out_dir, "prompts", stem + ".txt"), "w") as fh:
                fh.write(p)
            with open(os.path.join(out_dir, "responses", stem + ".txt"), "w") as fh:
                fh.write(resp)
        for c in it.candidates:
            with open(os.path.join(out_dir, "candidates", f"{nn}_{c.index}.mdl"), "w") as fh:
                fh.write(c.source)
    with open(os.path.join(out_dir, "fits.jsonl"), "w") as fh:
        for it in result.iterations:
            for f in it.fits:
                fh.write(json.dumps({"stage": "validation", "iteration": it.iteration, **f.to_dict()},
                                    sort_keys=True) + "\n")
        for f in result.test_fits:
            fh.write(json.dumps({"stage": "test", **f.to_dict()}, sort_keys=True) + "\n")
        for name, fits in result.baseline_fits.items():
            for f in fits:
                fh.write(json.dumps({"stage": "test", **f.to_dict()}, sort_keys=True) + "\n")
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(result.to_json())
    return out_dir
