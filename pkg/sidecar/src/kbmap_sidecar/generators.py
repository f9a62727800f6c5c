"""Generation backends behind POST /generate."""

import zlib

from .model import beam_generate, load_checkpoint

SEP = "[SEP]"

DEFAULT_RELATIONS = ("AtLocation", "CapableOf", "HasA", "UsedFor", "Causes",
                     "PartOf", "Desires", "HasProperty", "ReceivesAction",
                     "DistinctFrom")


class TemplateGenerator:
    """Model-free deterministic generator: candidates restate the prompt's
    triple under hash-chosen relations and argument shapes."""

    name = "template"

    def __init__(self, relations=DEFAULT_RELATIONS):
        self.relations = tuple(relations)

    def _parse(self, prompt: str) -> tuple[str, str, str]:
        left = prompt.rsplit(SEP, 1)[0].strip()
        first, last = left.find(", "), left.rfind(", ")
        if first < 0 or last == first:
            return (left or "thing", "relate", left or "thing")
        return (left[:first], left[first + 2:last], left[last + 2:])

    def generate(self, prompts: list[str], k: int) -> list[list[dict]]:
        out = []
        for prompt in prompts:
            s, p, o = self._parse(prompt)
            candidates = []
            for rank in range(k):
                h = zlib.crc32(f"{prompt}#{rank}".encode("utf-8"))
                rel = self.relations[h % len(self.relations)]
                if rank == 0:
                    text = f"{prompt.rstrip()} {s}, CapableOf, {p} {o}".strip()
                elif h % 3 == 0:
                    text = f"{s}, {rel}, {o}"
                elif h % 3 == 1:
                    text = f"{o}, {rel}, {s}"
                else:
                    text = f"{s}, {rel}, {p} {o}"
                candidates.append({"text": text, "score": -0.25 * (rank + 1), "rank": rank})
            out.append(candidates)
        return out


class CheckpointGenerator:
    """Serves a finetuned toy LSTM checkpoint via beam search; candidate
    text is the full line including the prompt and separator."""

    def __init__(self, checkpoint_path):
        self.name = f"checkpoint:{checkpoint_path}"
        self.model, self.vocab, self.relations, self.config = load_checkpoint(checkpoint_path)

    def generate(self, prompts: list[str], k: int) -> list[list[dict]]:
        out = []
        for prompt in prompts:
            candidates = beam_generate(self.model, self.vocab, prompt, k,
                                       max_len=self.config.get("max_len", 32))
            out.append([{"text": text, "score": score, "rank": rank}
                        for rank, (text, score) in enumerate(candidates)])
        return out


def make_generator(spec: str):
    if spec == "template":
        return TemplateGenerator()
    if spec.startswith("checkpoint:"):
        return CheckpointGenerator(spec.split(":", 1)[1])
    raise ValueError(f"unknown generator {spec!r} (use 'template' or 'checkpoint:<path>')")
