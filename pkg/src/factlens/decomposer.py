"""Claim decomposition: few-shot prompting with seeded demonstration sampling.

The prompt bundles 3 of the 4 shipped demonstrations in a seeded random
order, so identical (claim, seed) pairs always produce identical prompts on
every platform.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from pathlib import Path

from . import prompts
from .core import ClaimRecord, Decomposition, FactLensError
from .providers import ChatRequest

DEFAULT_SEED = 17

_DEMOS_IN_PROMPT = 3
_BULLET_RE = re.compile(r"^(?:[-*•]+|\d+[.)])\s*")
_LABEL_RE = re.compile(r"^sub[_ ]?claims?\s*:\s*", re.IGNORECASE)

_MASK64 = (1 << 64) - 1


class DecompositionError(FactLensError):
    """The model output could not be turned into a sub-claim list."""


class _SplitMix64:
    """Tiny 64-bit deterministic generator; same sequence on every platform."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        # Rejection sampling keeps the draw exactly uniform.
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            value = self.next_u64()
            if value < limit:
                return value % n

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class DemonstrationSet:
    """Exactly four (claim, sub-claim list) pairs shipped with the package."""

    demos: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "demos", tuple((claim, tuple(subs)) for claim, subs in self.demos)
        )
        if len(self.demos) != 4:
            raise ValueError(f"expected exactly 4 demonstrations, got {len(self.demos)}")
        for claim, subs in self.demos:
            if not subs:
                raise ValueError(f"demonstration {claim!r} has no sub-claims")

    @classmethod
    def load(cls, prompts_dir: str | Path | None = None) -> "DemonstrationSet":
        data = prompts.load_json(prompts.DEMONSTRATIONS, prompts_dir)
        return cls(tuple((d["claim"], tuple(d["sub_claims"])) for d in data))


def sample_demonstrations(
    demos: DemonstrationSet, seed: int
) -> list[tuple[str, tuple[str, ...]]]:
    """Pick 3 of the 4 demonstrations in seeded random order."""
    rng = _SplitMix64(seed)
    order = list(range(len(demos.demos)))
    rng.shuffle(order)
    return [demos.demos[i] for i in order[:_DEMOS_IN_PROMPT]]


def build_decomposition_prompt(
    claim: str,
    demos: DemonstrationSet,
    seed: int,
    prompts_dir: str | Path | None = None,
) -> str:
    """Fill the decomposition template; deterministic given (claim, demos, seed)."""
    template = prompts.load_text(prompts.DECOMPOSITION_TEMPLATE, prompts_dir)
    block = "\n\n".join(
        f"Claim: {demo_claim}\nSub_Claims: {prompts.render_list(subs)}"
        for demo_claim, subs in sample_demonstrations(demos, seed)
    )
    return prompts.fill(template, demonstrations=block, claim=claim)


def parse_subclaim_list(raw: str) -> list[str]:
    """Parse a model's sub-claim list.

    Accepts bracketed quoted lists, dash/number bullets, or one item per
    line; strips quotes and bullets and drops empty lines. A single bare
    line with no list markers is treated as prose and rejected.
    """
    text = raw.strip()
    if not text:
        raise DecompositionError("empty sub-claim response")

    match = re.search(r"\[.*\]", text, re.DOTALL)
    if match:
        try:
            parsed = ast.literal_eval(match.group())
        except (ValueError, SyntaxError):
            parsed = None
        if isinstance(parsed, (list, tuple)):
            items = [str(item).strip() for item in parsed if str(item).strip()]
            if items:
                return items

    marked: list[str] = []
    plain: list[str] = []
    for line in text.splitlines():
        line = _LABEL_RE.sub("", line.strip())
        stripped = _BULLET_RE.sub("", line)
        had_marker = stripped != line
        stripped = stripped.strip().strip("'\"").strip()
        if not stripped:
            continue
        if had_marker:
            marked.append(stripped)
        else:
            plain.append(stripped)
    if marked:
        return marked
    if len(plain) >= 2:
        return plain
    raise DecompositionError(f"no sub-claim list found in response: {raw[:200]!r}")


class Decomposer:
    """Turns claims into decompositions with the few-shot prompt."""

    def __init__(
        self,
        provider,
        model: str = "gpt-4o",
        demos: DemonstrationSet | None = None,
        prompts_dir: str | Path | None = None,
        seed: int = DEFAULT_SEED,
        temperature: float = 0.0,
    ) -> None:
        self._provider = provider
        self._model = model
        self._demos = demos or DemonstrationSet.load(prompts_dir)
        self._prompts_dir = prompts_dir
        self._seed = seed
        self._temperature = temperature

    def decompose(self, claim: ClaimRecord, seed: int | None = None) -> Decomposition:
        """Decompose one claim; retries an unparseable model output once."""
        seed = self._seed if seed is None else seed
        prompt = build_decomposition_prompt(claim.claim, self._demos, seed, self._prompts_dir)
        request = ChatRequest(model=self._model, prompt=prompt, temperature=self._temperature)
        last_error: DecompositionError | None = None
        for _ in range(2):
            raw = self._provider.complete(request)
            try:
                sub_claims = parse_subclaim_list(raw)
            except DecompositionError as exc:
                last_error = exc
                continue
            return Decomposition(
                claim_id=claim.id, sub_claims=tuple(sub_claims), generator=self._model, seed=seed
            )
        raise DecompositionError(f"claim {claim.id!r}: {last_error}")
