#!/usr/bin/env python3
"""Regenerates the rendered prompt goldens from core/prompts and inputs.json.

Written separately from the C++ renderer so the two can be compared.
"""
import json
import pathlib
import re

HERE = pathlib.Path(__file__).resolve().parent
ASSETS = HERE.parents[2] / "core" / "prompts"


def q(s):
    return '"' + s + '"'


def fill(name, positional, named=None):
    text = (ASSETS / f"{name}.txt").read_bytes().decode("utf-8")
    named = named or {}
    lines = []
    for line in text.split("\n"):
        m = re.fullmatch(r"\{([a-z ]+)\}", line)
        if m and named.get(m.group(1)) == "":
            lines.append(None)
            continue
        lines.append(line)
    # A dropped line takes its line break with it.
    text = "\n".join(l for l in lines if l is not None)
    for key, value in named.items():
        text = text.replace("{" + key + "}", value)
    parts = text.split("{}")
    assert len(parts) == len(positional) + 1, name
    out = parts[0]
    for value, rest in zip(positional, parts[1:]):
        out += value + rest
    return out


def refine(inp):
    label = {"entail": "ENTAILMENT", "contradict": "CONTRADICTION"}
    atoms = [f"ORIGINAL ANSWER: {q(inp['response'])}"]
    ctx, rel = [], []
    for i, a in enumerate(inp["incorrect"], 1):
        atoms.append(f"INCORRECT ATOM {i}: {q(a['text'])}")
        for j, (passage, kind) in enumerate(a["evidence"], 1):
            ctx.append(f"CONTEXT {i}-{j} FOR INCORRECT ATOM {i}: {q(passage)}")
            rel.append(f"RELATION FROM CONTEXT {i}-{j} TO INCORRECT ATOM {i}: {q(label[kind])}")
    for i, u in enumerate(inp["unverified"], 1):
        atoms.append(f"UNVERIFIED ATOM {i}: {q(u)}")
    return fill("refine", [inp["question"]], {
        "incorrect atoms": "\n".join(atoms),
        "contexts for incorrect atoms": "\n".join(ctx),
        "relations from contexts to incorrect atoms": "\n".join(rel),
    })


def main():
    inputs = json.loads((HERE / "inputs.json").read_text())
    out = {
        "judge": fill("judge", [inputs["judge"]["reference"], inputs["judge"]["candidate"]]),
        "llm1": fill("llm1", [inputs["llm1"]["question"], inputs["llm1"]["response"]]),
        "llm2": fill("llm2", [inputs["llm2"]["question"],
                              "\n".join(q(c) for c in inputs["llm2"]["contexts"]),
                              inputs["llm2"]["response"],
                              "\n".join(q(u) for u in inputs["llm2"]["unverified"])]),
        "refine": refine(inputs["refine"]),
        "refine_unverified_only": refine(inputs["refine_unverified_only"]),
        "veli5": fill("veli5", [inputs["veli5"]["question"]]),
        "atomize": fill("atomize", [inputs["atomize"]["response"]]),
        "revise": fill("revise", [inputs["revise"]["response"],
                                  "\n".join(f"{i}. {a}" for i, a in enumerate(inputs["revise"]["atoms"], 1))]),
        "query": fill("query", [inputs["query"]["statement"]]),
        "relation": fill("relation", [inputs["relation"]["premise"], inputs["relation"]["hypothesis"]]),
    }
    for name, text in out.items():
        (HERE / f"{name}.rendered.txt").write_bytes(text.encode("utf-8"))


if __name__ == "__main__":
    main()
