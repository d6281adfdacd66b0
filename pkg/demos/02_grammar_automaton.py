"""The grammar automaton and its intersection with a sentence.

The grammar is a small cyclic DFA accepting exactly the well-formed tag
sequences of any length.  Intersecting it with an n-word sentence gives an
acyclic lattice whose accepting paths are the well-formed sequences of length
n, with one transition batch per word: inference cost is linear in n.
"""

import itertools

from disctag import (
    build_lattice,
    determinize,
    export_text,
    grammar_automaton,
    is_well_formed,
    minimize,
    remove_epsilon,
)
from disctag.scheme import TAGS

semantic = grammar_automaton("semantic")
print("semantic grammar:", semantic.num_states, "states,", len(semantic.transitions), "transitions")
print("deterministic:", semantic.is_deterministic, "| epsilon-free:", semantic.is_epsilon_free)

minimal = minimize(determinize(remove_epsilon(semantic)))
print("minimal DFA:", minimal.num_states, "states")

structural = grammar_automaton("structural")
print("structural grammar:", structural.num_states, "states (leftmost component forced to x)")

# The language, counted by brute force vs. by lattice paths.
print("\n n  well-formed  lattice-paths")
for n in range(1, 5):
    brute = sum(1 for seq in itertools.product(TAGS, repeat=n) if is_well_formed(seq))
    paths = sum(1 for _ in build_lattice(semantic, n).accepting_sequences())
    print(f"{n:2d}  {brute:11d}  {paths:13d}")

# Lattice size grows exactly linearly with the sentence.
for n in (8, 16, 32):
    print(f"lattice transitions at n={n:2d}: {build_lattice(semantic, n).num_transitions}")

# Text export, e.g. for graph tooling; here just the first lines.
print("\nexport preview:")
print("\n".join(export_text(minimal).splitlines()[:8]))
