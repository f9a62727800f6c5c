"""Toy word-level LSTM language model over translation lines of the form

    open subject, predicate, object [SEP] subject, Relation, object

Small enough to finetune on CPU in seconds, structured enough to learn the
output grammar from a few thousand examples.
"""

import torch
from torch import nn

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)


def tokenize_line(text: str) -> list[str]:
    return text.replace(",", " , ").split()


def render_tokens(tokens: list[str]) -> str:
    return " ".join(tokens).replace(" , ", ", ").replace(" ,", ",")


class Vocab:
    def __init__(self, tokens: list[str]):
        self.itos = list(SPECIALS) + sorted(set(tokens) - set(SPECIALS))
        self.stoi = {tok: i for i, tok in enumerate(self.itos)}

    def __len__(self) -> int:
        return len(self.itos)

    def encode(self, tokens: list[str]) -> list[int]:
        unk = self.stoi[UNK]
        return [self.stoi.get(tok, unk) for tok in tokens]

    def decode(self, ids: list[int]) -> list[str]:
        return [self.itos[i] for i in ids]


class TripleLM(nn.Module):
    def __init__(self, vocab_size: int, embed_dim: int = 96, hidden_dim: int = 256):
        super().__init__()
        self.embed = nn.Embedding(vocab_size, embed_dim, padding_idx=0)
        self.lstm = nn.LSTM(embed_dim, hidden_dim, batch_first=True)
        self.out = nn.Linear(hidden_dim, vocab_size)

    def forward(self, ids: torch.Tensor, state=None):
        hidden, state = self.lstm(self.embed(ids), state)
        return self.out(hidden), state


def _advance(model: TripleLM, ids: list[int]):
    """Feed a full prefix; return (log-probs over next token, lstm state)."""
    with torch.no_grad():
        logits, state = model(torch.tensor([ids], dtype=torch.long))
    return torch.log_softmax(logits[0, -1], dim=-1), state


def _step(model: TripleLM, token_id: int, state):
    with torch.no_grad():
        logits, state = model(torch.tensor([[token_id]], dtype=torch.long), state)
    return torch.log_softmax(logits[0, -1], dim=-1), state


def beam_generate(model: TripleLM, vocab: Vocab, prompt: str, k: int,
                  max_len: int = 32, beam_width: int | None = None):
    """Beam-search continuations of the prompt. Returns up to k
    (text, total_logprob) pairs, best first; text is the full line
    including the prompt so callers can split on the separator token."""
    model.eval()
    width = beam_width or max(2 * k, 4)
    prompt_tokens = tokenize_line(prompt)
    prefix = [vocab.stoi[BOS]] + vocab.encode(prompt_tokens)
    logprobs, state = _advance(model, prefix)
    eos = vocab.stoi[EOS]

    beams = [(0.0, [], state, logprobs)]  # (score, generated ids, state, next log-probs)
    finished: list[tuple[float, list[int]]] = []
    for _ in range(max_len):
        expansions = []
        for score, ids, state, logprobs in beams:
            top = torch.topk(logprobs, min(width, len(vocab)))
            for logp, tok in zip(top.values.tolist(), top.indices.tolist()):
                expansions.append((score + logp, ids, tok, state))
        expansions.sort(key=lambda e: -e[0])
        beams = []
        for score, ids, tok, state in expansions:
            if len(beams) >= width:
                break
            if tok == eos:
                finished.append((score, ids))
                continue
            logprobs, new_state = _step(model, tok, state)
            beams.append((score, ids + [tok], new_state, logprobs))
        if len(finished) >= k and not beams:
            break
        if len(finished) >= max(k, width):
            break
    for score, ids, _, _ in beams[: max(0, k - len(finished))]:
        finished.append((score, ids))
    finished.sort(key=lambda f: -f[0])
    out = []
    for score, ids in finished[:k]:
        text = render_tokens(prompt_tokens + vocab.decode(ids))
        out.append((text, score))
    return out


def save_checkpoint(path, model: TripleLM, vocab: Vocab, relations: list[str],
                    config: dict) -> None:
    torch.save({
        "state_dict": model.state_dict(),
        "itos": vocab.itos,
        "relations": relations,
        "config": config,
    }, path)


def load_checkpoint(path) -> tuple[TripleLM, Vocab, list[str], dict]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    vocab = Vocab([])
    vocab.itos = payload["itos"]
    vocab.stoi = {tok: i for i, tok in enumerate(vocab.itos)}
    config = payload["config"]
    model = TripleLM(len(vocab), config["embed_dim"], config["hidden_dim"])
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, vocab, payload["relations"], config
