#!/usr/bin/env python3
"""Convert a Hugging Face BERT checkpoint into a covex encoder directory.

Writes <out>/config.json, <out>/vocab.txt and <out>/weights.covex. Linear
weights are transposed to [in x out]; biases and layer-norm vectors become
1 x n rows. The pooler is dropped.

    convert_hf_weights.py digitalepidemiologylab/covid-twitter-bert-v2 \
        $COVEX_MODEL_CACHE/digitalepidemiologylab/covid-twitter-bert-v2

--reference TEXT additionally stores the model's last hidden state for TEXT
(dropout off) in reference.json, for checking the C++ forward pass.
"""

import argparse
import json
import os
import shutil
import struct
import sys

MAGIC = b"COVEXAR1"


def write_archive(path, meta, tensors):
    import numpy as np

    header = {
        "meta": meta,
        "tensors": [{"name": n, "rows": int(a.shape[0]), "cols": int(a.shape[1])} for n, a in tensors],
    }
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8")
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for _, a in tensors:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    os.replace(tmp, path)


def row(t):
    return t.detach().double().numpy().reshape(1, -1)


def linear(tensors, name, module):
    tensors.append((name + ".weight", module.weight.detach().double().numpy().T))
    tensors.append((name + ".bias", row(module.bias)))


def convert(model):
    emb = model.embeddings
    t = [
        ("encoder.embeddings.word_embeddings", emb.word_embeddings.weight.detach().double().numpy()),
        ("encoder.embeddings.position_embeddings", emb.position_embeddings.weight.detach().double().numpy()),
        ("encoder.embeddings.token_type_embeddings", emb.token_type_embeddings.weight.detach().double().numpy()),
        ("encoder.embeddings.layer_norm.gamma", row(emb.LayerNorm.weight)),
        ("encoder.embeddings.layer_norm.beta", row(emb.LayerNorm.bias)),
    ]
    for i, layer in enumerate(model.encoder.layer):
        p = "encoder.layer.%d." % i
        att = layer.attention
        linear(t, p + "attention.query", att.self.query)
        linear(t, p + "attention.key", att.self.key)
        linear(t, p + "attention.value", att.self.value)
        linear(t, p + "attention.output", att.output.dense)
        t.append((p + "attention.layer_norm.gamma", row(att.output.LayerNorm.weight)))
        t.append((p + "attention.layer_norm.beta", row(att.output.LayerNorm.bias)))
        linear(t, p + "ffn.intermediate", layer.intermediate.dense)
        linear(t, p + "ffn.output", layer.output.dense)
        t.append((p + "ffn.layer_norm.gamma", row(layer.output.LayerNorm.weight)))
        t.append((p + "ffn.layer_norm.beta", row(layer.output.LayerNorm.bias)))
    return t


def main(argv):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("model", help="hub id or local directory")
    ap.add_argument("out", help="output directory")
    ap.add_argument("--reference", help="also dump hidden states for this text")
    args = ap.parse_args(argv)

    import torch
    from transformers import AutoConfig, AutoTokenizer, BertModel

    cfg = AutoConfig.from_pretrained(args.model)
    if cfg.model_type != "bert":
        sys.exit("only BERT checkpoints are supported, got %s" % cfg.model_type)
    if cfg.hidden_act != "gelu":
        sys.exit("hidden_act must be gelu, got %s" % cfg.hidden_act)
    tok = AutoTokenizer.from_pretrained(args.model)
    model = BertModel.from_pretrained(args.model, add_pooling_layer=False).eval()

    os.makedirs(args.out, exist_ok=True)
    config = {
        "hidden_size": cfg.hidden_size,
        "num_hidden_layers": cfg.num_hidden_layers,
        "num_attention_heads": cfg.num_attention_heads,
        "intermediate_size": cfg.intermediate_size,
        "max_position_embeddings": cfg.max_position_embeddings,
        "type_vocab_size": cfg.type_vocab_size,
        "layer_norm_eps": cfg.layer_norm_eps,
        "hidden_dropout_prob": cfg.hidden_dropout_prob,
        "hidden_act": "gelu",
        "do_lower_case": bool(getattr(tok, "do_lower_case", True)),
    }
    with open(os.path.join(args.out, "config.json"), "w") as f:
        json.dump(config, f, indent=2)

    vocab_src = getattr(tok, "vocab_file", None)
    if vocab_src and os.path.exists(vocab_src):
        shutil.copyfile(vocab_src, os.path.join(args.out, "vocab.txt"))
    else:
        vocab = sorted(tok.get_vocab().items(), key=lambda kv: kv[1])
        with open(os.path.join(args.out, "vocab.txt"), "w", encoding="utf-8") as f:
            for token, _ in vocab:
                f.write(token + "\n")

    write_archive(os.path.join(args.out, "weights.covex"), {"source": args.model}, convert(model))

    if args.reference is not None:
        enc = tok(args.reference, return_tensors="pt")
        with torch.no_grad():
            model = model.double()
            hidden = model(**enc).last_hidden_state[0].numpy()
        ref = {
            "text": args.reference,
            "tokens": tok.convert_ids_to_tokens(enc["input_ids"][0]),
            "hidden": hidden.tolist(),
        }
        with open(os.path.join(args.out, "reference.json"), "w") as f:
            json.dump(ref, f)
    print("wrote", args.out)


if __name__ == "__main__":
    main(sys.argv[1:])
