"""What the evaluation metrics reward and punish.

Run:  python3 demos/05_metrics.py
"""

from factdesc.metrics import EvalPair, bleu, cider, evaluate_corpus, meteor_exact, rouge_l


def pairs_of(*texts):
    return [EvalPair(c.split(), r.split()) for c, r in texts]


# BLEU is precision-focused with a brevity penalty: dropping words from
# a correct description is punished multiplicatively.
print("BLEU-1, exact match:   ",
      bleu(pairs_of(("street in elsloo", "street in elsloo")), 1))
print("BLEU-1, truncated:     ",
      bleu(pairs_of(("the cat sat", "the cat sat on mat")), 1))

# Low orders back off to a smoothed floor instead of zeroing the
# geometric mean; short single-reference descriptions need that.
print("BLEU-4, short texts:   ",
      bleu(pairs_of(("street in elsloo", "street in elsloo")), 4))

# ROUGE-L measures the longest common subsequence, weighted toward
# recall.
print("\nROUGE-L, half overlap: ", rouge_l(pairs_of(("the cat", "the dog"))))

# Exact-match METEOR rewards recall but charges for fragmentation: the
# same tokens in the wrong order lose half the score.
print("METEOR-exact, in order:", meteor_exact(pairs_of(("a b c", "a b c"))))
print("METEOR-exact, swapped: ", meteor_exact(pairs_of(("b a", "a b"))))

# CIDEr weights n-grams by rarity across the reference corpus, so
# getting distinctive names right matters more than function words.
same = pairs_of(("road in northern france", "road in northern france"),
                ("painting by hendrick avercamp", "painting by hendrick avercamp"))
print("\nCIDEr, two exact pairs:", cider(same))

# The corpus evaluator wires everything together over id-matched rows.
candidates = {"Q1": "street in elsloo".split(), "Q2": "painting by avercamp".split()}
references = {"Q1": "street in elsloo".split(), "Q2": "painting by hendrick avercamp".split()}
print("\nfull report:")
print(evaluate_corpus(candidates, references).to_text())
