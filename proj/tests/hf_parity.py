#!/usr/bin/env python3
"""Checks the C++ encoder and tokenizer against Hugging Face transformers.

No pretrained weights are needed: a small BERT is initialized randomly and
saved locally, converted with tools/convert_hf_weights.py, and the C++ side
(hf_parity_check) must reproduce the tokens and last hidden states.

Exit code 77 (ctest skip) when torch or transformers is unavailable.
"""

import argparse
import json
import os
import subprocess
import sys

TEXTS = [
    "My mom tested positive for COVID-19 yesterday!!",
    "Café owner in São Paulo says NAÏVE tests don't work",
    "unaffable coronavirus #StayHome @cdc http://t.co/x",
    "中文 mixed with english, and Ångström",
    "",
]

WORDS = [
    "my", "mom", "tested", "positive", "for", "covid", "-", "19", "yesterday", "!", "cafe", "owner",
    "in", "sao", "paulo", "says", "naive", "tests", "don", "'", "t", "work", "un", "##aff", "##able",
    "corona", "##virus", "#", "stay", "##home", "@", "cd", "##c", "http", ":", "/", ".", "co", "x",
    "中", "文", "mixed", "with", "english", ",", "and", "angstrom", "s", "##ao",
]


def main(argv):
    ap = argparse.ArgumentParser()
    ap.add_argument("--converter", required=True)
    ap.add_argument("--checker", required=True)
    ap.add_argument("--work-dir", required=True)
    args = ap.parse_args(argv)

    try:
        import torch
        from transformers import BertConfig, BertModel, BertTokenizer
    except ImportError as e:
        print("skipping: %s" % e)
        return 77

    torch.manual_seed(0)
    src = os.path.join(args.work_dir, "hf-model")
    out_root = os.path.join(args.work_dir, "converted")
    os.makedirs(src, exist_ok=True)
    os.makedirs(out_root, exist_ok=True)

    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + WORDS
    vocab_path = os.path.join(src, "vocab.txt")
    with open(vocab_path, "w", encoding="utf-8") as f:
        f.write("\n".join(vocab) + "\n")
    tok = BertTokenizer(vocab_path, do_lower_case=True)
    tok.save_pretrained(src)

    cfg = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=48,
        max_position_embeddings=64,
        hidden_act="gelu",
    )
    model = BertModel(cfg, add_pooling_layer=False).eval()
    # Non-trivial layer norms, so their loading is actually tested.
    with torch.no_grad():
        for name, p in model.named_parameters():
            if "LayerNorm" in name:
                p.add_(0.1 * torch.randn_like(p))
    model.save_pretrained(src)

    out = os.path.join(out_root, "tiny-bert")
    subprocess.run([sys.executable, args.converter, src, out, "--reference", TEXTS[0]], check=True)

    refs = []
    model = model.double()
    for text in TEXTS:
        enc = tok(text, return_tensors="pt")
        with torch.no_grad():
            hidden = model(**enc).last_hidden_state[0].numpy()
        refs.append({
            "text": text,
            "tokens": tok.convert_ids_to_tokens(enc["input_ids"][0]),
            "hidden": hidden.tolist(),
        })
    with open(os.path.join(out, "reference.json")) as f:
        refs.append(json.load(f))
    refs_path = os.path.join(args.work_dir, "references.json")
    with open(refs_path, "w") as f:
        json.dump(refs, f)

    return subprocess.run([args.checker, out_root, "tiny-bert", refs_path]).returncode


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
