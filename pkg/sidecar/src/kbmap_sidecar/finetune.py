"""Finetuning for the toy triple translator.

Input: a text file with one training example per line,
``open triple [SEP] closed triple``, both sides comma-separated. The run
holds out a fraction of lines, trains the LSTM LM on the rest, logs the
loss per epoch, saves a checkpoint, and reports how many held-out prompts
decode into parseable closed triples.
"""

import json
import logging
import random
from pathlib import Path

import torch
from torch import nn

from .model import (
    BOS,
    EOS,
    TripleLM,
    Vocab,
    beam_generate,
    save_checkpoint,
    tokenize_line,
)

log = logging.getLogger(__name__)

SEP = "[SEP]"


def parse_closed_side(text: str, relations: set[str]) -> bool:
    """Well-formedness check mirroring the pipeline's parser: three
    nonempty comma-separated fields after the last separator, the middle
    one a known relation."""
    candidate = text.rsplit(SEP, 1)[-1].strip()
    first, last = candidate.find(", "), candidate.rfind(", ")
    if first < 0 or last == first:
        return False
    subject, relation, obj = candidate[:first], candidate[first + 2:last], candidate[last + 2:]
    return bool(subject.strip()) and bool(obj.strip()) and relation in relations


def _relation_of(line: str) -> str | None:
    candidate = line.rsplit(SEP, 1)[-1].strip()
    first, last = candidate.find(", "), candidate.rfind(", ")
    if first < 0 or last == first:
        return None
    return candidate[first + 2:last]


def finetune(train_file, out_dir, epochs: int = 3, holdout_fraction: float = 0.1,
             batch_size: int = 16, lr: float = 3e-3, embed_dim: int = 96,
             hidden_dim: int = 256, seed: int = 0, max_len: int = 32) -> dict:
    if epochs <= 0:
        raise ValueError("epochs must be positive")
    lines = [ln for ln in Path(train_file).read_text("utf-8").splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"training file {train_file} is empty")
    if any(SEP not in ln for ln in lines):
        raise ValueError("every training line must contain the separator token")

    rng = random.Random(seed)
    torch.manual_seed(seed)
    order = list(range(len(lines)))
    rng.shuffle(order)
    n_holdout = max(1, int(len(lines) * holdout_fraction)) if len(lines) > 1 else 0
    holdout = [lines[i] for i in order[:n_holdout]]
    train = [lines[i] for i in order[n_holdout:]]

    vocab = Vocab([tok for ln in train for tok in tokenize_line(ln)])
    relations = sorted({r for ln in train if (r := _relation_of(ln)) is not None})
    sequences = [[vocab.stoi[BOS]] + vocab.encode(tokenize_line(ln)) + [vocab.stoi[EOS]]
                 for ln in train]

    model = TripleLM(len(vocab), embed_dim, hidden_dim)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss(ignore_index=0)

    losses = []
    for epoch in range(epochs):
        model.train()
        rng.shuffle(sequences)
        total, batches = 0.0, 0
        for start in range(0, len(sequences), batch_size):
            batch = sequences[start:start + batch_size]
            width = max(len(s) for s in batch)
            ids = torch.zeros(len(batch), width, dtype=torch.long)
            for row, seq in enumerate(batch):
                ids[row, :len(seq)] = torch.tensor(seq)
            logits, _ = model(ids[:, :-1])
            loss = loss_fn(logits.reshape(-1, len(vocab)), ids[:, 1:].reshape(-1))
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item()
            batches += 1
        losses.append(total / batches)
        log.info("epoch %d/%d: loss %.4f", epoch + 1, epochs, losses[-1])

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = {"embed_dim": embed_dim, "hidden_dim": hidden_dim, "max_len": max_len}
    checkpoint = out_dir / "model.pt"
    save_checkpoint(checkpoint, model, vocab, relations, config)

    parse_ok = 0
    for line in holdout:
        prompt = line.split(SEP, 1)[0].rstrip() + f" {SEP} "
        candidates = beam_generate(model, vocab, prompt, k=1, max_len=max_len)
        if candidates and parse_closed_side(candidates[0][0], set(relations)):
            parse_ok += 1
    parse_rate = parse_ok / len(holdout) if holdout else None

    report = {
        "epochs": epochs,
        "losses": losses,
        "n_train": len(train),
        "n_holdout": len(holdout),
        "vocab_size": len(vocab),
        "relations": relations,
        "holdout_parse_rate": parse_rate,
        "checkpoint": str(checkpoint),
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n", "utf-8")
    log.info("holdout parse rate: %s", parse_rate)
    return report
