"""Prompt building, response parsing, and offline prior extraction.

The language-model client is a contract; here a replay client serves
canned transcripts, which is also how the test suite stays hermetic.
"""
from consolenav.priors import (
    COOCCURRENCE_TEMPLATE,
    HIGH_LEVEL_LANDMARK_TEMPLATE,
    ReplayClient,
    build_prompt,
    extract_priors,
    parse_numbered_list,
)

instruction = ("Go to the lounge on the first level and bring the trinket "
               "that's sitting on the fireplace.")

prompt = build_prompt(HIGH_LEVEL_LANDMARK_TEMPLATE, instruction)
print("landmark prompt tail:")
print("  ...", "\n   ".join(prompt.splitlines()[-2:]))

response = "1.first level;\n2.lounge;\n3.fireplace;\n4.trinket."
print("\nparsed landmarks:", parse_numbered_list(response))

transcripts = {prompt: response}
for landmark in ["first level", "lounge", "fireplace", "trinket"]:
    co_prompt = build_prompt(COOCCURRENCE_TEMPLATE, landmark)
    transcripts[co_prompt] = "1. rug;\n2. lamp;\n3. painting;\n4. window;\n5. vase;"

client = ReplayClient(transcripts)
priors = extract_priors(instruction, "high_level", client, n_co=3)
print("\nextracted priors (navigational order, 3 cooccurrences each):")
for lm, co in zip(priors.landmarks, priors.cooccurrences):
    print(f"  {lm:12s} -> {co}")
