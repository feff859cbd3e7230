#!/usr/bin/env python3
"""Regenerates the replay cassettes and golden request digests.

Requests are rebuilt here from the prompt templates by hand, so the keys act as
an independent check on the C++ canonical_key and on the chain's prompts.
"""
import hashlib
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent
JAVA = HERE / "java"
MODEL = "gpt-3.5-turbo"
RECORDED_AT = "2026-01-15T10:00:00Z"

LISTING = ("What Java SDK & JDK methods are used in the method you provided? "
           "Please list the fully qualified names of the methods.")
GENERAL = "Please pay attention to potential exceptions."
EVA = "Can the code handle all exceptions in good practice? (Y/N)?"

VGET = "java.util.Vector.get(int index)"
VSET = "java.util.Vector.set(int index, E element)"
RANGE = "if the index is out of range (index < 0 || index >= size())"
AIOOBE = "ArrayIndexOutOfBoundsException"


def key(messages, model=MODEL, temperature=0.0):
    doc = {"messages": [{"content": c, "role": r} for r, c in messages],
           "model": model, "temperature": temperature}
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def line(messages, response):
    rec = {
        "key": key(messages),
        "request": {
            "model": MODEL,
            "temperature": 0.0,
            "max_tokens": 2048,
            "messages": [{"role": r, "content": c} for r, c in messages],
        },
        "response": response,
        "recorded_at": RECORDED_AT,
    }
    return json.dumps(rec, separators=(",", ":"), ensure_ascii=False)


def java(name):
    return (JAVA / name).read_text().rstrip()


def fenced(intro, code, outro=""):
    text = f"{intro}\n\n```java\n{code}\n```"
    return text + (f"\n\n{outro}" if outro else "")


def fine(items):
    return ". ".join(f"Please check {cond} for {api}, otherwise throw {exc}" for api, exc, cond in items)


def question(api, exc):
    return f"Is the {exc} handled for {api} in the code snippets? (Y/N)"


def eva(code):
    return f"```java\n{code}\n```\n{EVA}"


def main():
    records = []

    def add(messages, response):
        records.append(line(messages, response))
        return response

    # swap: the four variants of the vector walkthrough
    gen = ("user", "Please write a Java method to swap two elements in a vector")
    a = add([gen], fenced("Here is a Java method that swaps two elements in a vector:", java("swap_a.java"),
                          "The method reads both elements first and then writes them back in swapped order."))
    b = add([gen, ("assistant", a), ("user", GENERAL)],
            fenced("Sure. Here is the method with exception handling added:", java("swap_b.java")))
    add([gen, ("assistant", a), ("user", f"Please pay attention to {AIOOBE}.")],
        fenced("Here is the updated method that catches the exception:", java("swap_c.java")))
    fine_prompt = fine([(VGET, AIOOBE, RANGE), (VSET, AIOOBE, RANGE)])
    d = add([gen, ("assistant", a), ("user", fine_prompt)],
            fenced("Here is the method with explicit index checks:", java("swap_d.java"),
                   "Both indices are validated before the vector is accessed."))

    # swap with the conversational checker
    listing = f"The method uses these methods:\n1. {VGET}\n2. {VSET}"
    h = [gen, ("assistant", a), ("user", LISTING)]
    add(h, listing)
    h += [("assistant", listing), ("user", question(VGET, AIOOBE))]
    add(h, "N")
    h += [("assistant", "N"), ("user", question(VSET, AIOOBE))]
    add(h, "No, the method does not check the index before calling set.")
    h += [("assistant", "No, the method does not check the index before calling set."), ("user", fine_prompt)]
    add(h, d)
    h += [("assistant", d), ("user", LISTING)]
    add(h, listing)
    h += [("assistant", listing), ("user", question(VGET, AIOOBE))]
    add(h, "Y")
    h += [("assistant", "Y"), ("user", question(VSET, AIOOBE))]
    add(h, "Yes, the index is validated before the call.")

    # LLMEva verdicts
    add([("user", eva(java("swap_d.java")))], "Y")
    add([("user", eva(java("swap_a.java")))], f"No, the {AIOOBE} thrown by get and set is not handled.")
    add([("user", eva(java("swap_c.java")))], "It depends on how the caller uses the method.")

    # delete_char: one StringBuilder rewrite
    gen2 = ("user", "Please write a Java method that removes the char at the specified position in this sequence")
    a2 = add([gen2], fenced("You can use StringBuilder.deleteCharAt:", java("charremover_a.java")))
    add([gen2, ("assistant", a2), ("user", fine([(
        "java.lang.StringBuilder.deleteCharAt(int index)", "StringIndexOutOfBoundsException",
        "if the index is negative or greater than or equal to length()")]))],
        fenced("Here is the method with a bounds check:", java("charremover_d.java")))
    add([("user", eva(java("charremover_d.java")))], "Yes.")

    (HERE / "cassettes" / "walkthrough.jsonl").write_text("\n".join(records) + "\n")

    golden = []
    for name, messages, temperature in [
        ("single_user", [("user", "Please write a Java method to swap two elements in a vector")], 0.0),
        ("warm", [("user", "Please write a Java method to swap two elements in a vector")], 0.7),
        ("two_turns", [("user", "a"), ("assistant", "b")], 0.0),
        ("two_turns_reordered", [("assistant", "b"), ("user", "a")], 0.0),
        ("unicode_and_escapes", [("system", "café → \"q\"\t\\n"), ("user", "line1\nline2\u0001")], 0.0),
    ]:
        golden.append({"name": name, "temperature": temperature,
                       "messages": [{"role": r, "content": c} for r, c in messages],
                       "key": key(messages, temperature=temperature)})
    (HERE / "cassettes" / "golden_keys.json").write_text(json.dumps(golden, indent=2, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
