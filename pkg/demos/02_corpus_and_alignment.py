"""From raw entity records to teacher-forcing targets.

Run:  python3 demos/02_corpus_and_alignment.py
"""

from factdesc import corpus
from factdesc.alignment import align_corpus, align_description

# The dataset format is JSONL, one entity per line; parse_record turns
# a decoded line into tokenized facts.
record = {
    "id": "Q19345316",
    "facts": [
        {"property": "instance of", "value": "street"},
        {"property": "location", "value": "Elsloo"},
    ],
    "description": "street in Elsloo",
}
entity = corpus.parse_record(record)
print("entity:", entity.id)
for i, fact in enumerate(entity.facts):
    print(f"  fact {i}: {fact.label()}   factual words: {fact.factual_words}")
print("description tokens:", entity.description_tokens)

# Factual words are the copyable tokens: value words with stopwords
# removed, order preserved.
fact = corpus.Fact.build("employer", "University of Oxford")
print("\n(employer, University of Oxford) ->", fact.factual_words)

# The vocabulary is the K most frequent description words after three
# specials; here K is tiny to make the cut visible.
vocab = corpus.build_vocabulary([entity], size=5)
print("\nvocabulary:", vocab.words)

# Alignment walks each description token through the facts in order:
# first fact containing it wins, otherwise the vocabulary, otherwise
# <UNK>.  The trailing <EOS> always maps to the vocabulary path.
aligned = align_description(entity, vocab)
print("\nalignment:")
for tok in aligned.tokens:
    where = (f"fact {tok.fact_index} pos {tok.copy_pos}"
             if tok.source.value == "fact" else tok.source.value)
    print(f"  {tok.surface:10s} -> {where}")

# Corpus-level statistics expose how noisy the heuristic is on a
# given dataset.
_, stats = align_corpus([entity], vocab)
print("\nsource counts:", stats)
