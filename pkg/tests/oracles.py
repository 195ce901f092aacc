"""Independent re-derivations used as test oracles."""
import random

from dpgen.lm import train_lm


def oracle_gaps(links, n_src, j):
    """Insertion points allowed for unaligned target word ``j``, written
    directly as a filter over every point of the source sentence."""
    left = [jj for _, jj in links if jj < j]
    right = [jj for _, jj in links if jj > j]
    if not left and not right:
        return None
    lo = max(i for i, jj in links if jj == max(left)) if left else None
    hi = min(i for i, jj in links if jj == min(right)) if right else None
    return [g for g in range(n_src + 1)
            if (lo is None or g > lo) and (hi is None or g <= hi)]


def oracle_select(words, gaps, candidates, lm):
    """Score every (gap, pronoun) sentence plus the original; the winner must
    be strictly better than the original. Ties: first gap, then first
    candidate, which is exactly the enumeration order."""
    best = None
    for g in gaps:
        for p in candidates:
            ppl = lm.perplexity(words[:g] + [p] + words[g:])
            if best is None or ppl < best[0]:
                best = (ppl, g, p)
    if best is None or not best[0] < lm.perplexity(words):
        return None
    return best[1], best[2]


TOY_SRC = ["说", "想", "去", "吃", "了", "饭", "好"]
TOY_PRON = ["我", "你", "他", "她", "它"]
TOY_TGT = ["said", "want", "go", "eat", "meal", "good"]


def toy_configuration(rng: random.Random):
    """A random pronoun-dropping sentence pair, an LM over a random corpus
    mixing source words and pronouns, and the unaligned pronoun's index."""
    n_src = rng.randint(1, 6)
    src = [rng.choice(TOY_SRC) for _ in range(n_src)]
    n_tgt = rng.randint(2, 6)
    j = rng.randrange(n_tgt)
    tgt = [rng.choice(TOY_TGT) for _ in range(n_tgt)]
    tgt[j] = rng.choice(["they", "you", "he", "it", "I", "she", "her"])
    links = set()
    for jj in range(n_tgt):
        if jj != j and rng.random() < 0.7:
            links.add((rng.randrange(n_src), jj))
            if rng.random() < 0.2:
                links.add((rng.randrange(n_src), jj))
    corpus = [[rng.choice(TOY_SRC + TOY_PRON) for _ in range(rng.randint(1, 6))] for _ in range(12)]
    lm = train_lm(corpus, order=rng.randint(1, 4), min_count=1)
    return src, tgt, frozenset(links), j, lm
