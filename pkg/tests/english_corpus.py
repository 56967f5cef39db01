"""Deterministic English-like corpus generator for tokenizer tests.

Samples words Zipf-style from a fixed lexicon, applies light morphology and
punctuation, and emits paragraphs until the requested size is reached. The
output is not literature, but its word-frequency and character statistics
are English-like, which is what byte-pair-encoding fertility depends on.
"""

from __future__ import annotations

import random

_STEMS = """
the of and to in is was he for it with as his on be at by had not are but from
or have an they which one you were her all she there would their we him been
has when who will more no if out so said what up its about into than them can
only other new some could time these two may then do first any my now such like
our over man me even most made after also did many before must through back
years where much your way well down should because each just those people mr
how too little state good very make world still own see men work long get here
between both life being under never day same another know while last might us
great old year off come since against go came right used take three states
himself few house use during without again place american around however home
small found mrs thought went say part once general high upon school every don
does got united left number course war until always away something fact though
water less public put think almost hand enough far took head yet government
system better set told nothing night end why called didn eyes find going look
asked later knew point next program city business give group toward young days
let room within children side social given order often national second possible
rather per face among form important big case become things', whole period
word body music white power real change kind believe act area across seemed
open door need others house study light saw along turned law want sense across
problem result best several felt nothing necessary development certain mind
behind ever leave paper ready quite able human feel four anything making story
department moment hours whose reason question member themselves available
community economic evidence audience ground boy common clear special sound
major plan various field am increase million president cost matter service
front local short company week action value church college class policy force
love create help cannot french experience age control office person schools
effect level stage provide student situation type themselves moreover example
idea history money minutes early position nature modern country society road
interest miles support report tax alone勝 process data research language model
training scale token vocabulary parameter compute budget curve optimal network
learning machine science analysis measure function value random sample test
method approach result error average total range limit growth rate design
source target input output memory storage device signal code sequence pattern
structure element object feature weight layer depth width batch epoch corpus
text character symbol frequency distribution entropy probability estimate
linear surface gradient descent search space region boundary constraint metric
distance vector matrix tensor dimension index table record file format stream
buffer queue stack tree graph node edge path cycle loop branch condition
version release module package library framework interface protocol server
client request response message channel session thread lock cache disk page
block segment chunk slice piece fraction portion share whole half quarter
third double triple single multiple
""".split()

# A couple of tokens above carry stray punctuation or non-latin characters
# from the hand-typed list; keep only clean alphabetic stems.
STEMS = sorted({w for w in _STEMS if w.isalpha() and w.isascii()})

SUFFIXES = ("", "", "", "", "s", "s", "ed", "ing", "ly", "er", "est", "tion", "ness", "ment")


def generate_corpus(target_bytes: int = 1_200_000, seed: int = 0) -> str:
    """English-like text of at least ``target_bytes`` UTF-8 bytes."""
    rng = random.Random(seed)
    n = len(STEMS)
    # Zipf-like weights over a shuffled lexicon so rank is decoupled from
    # alphabetical order.
    order = list(range(n))
    rng.shuffle(order)
    weights = [1.0 / (rank + 1) ** 1.07 for rank in range(n)]
    lexicon = [STEMS[i] for i in order]

    out: list[str] = []
    size = 0
    while size < target_bytes:
        paragraph: list[str] = []
        for _ in range(rng.randint(2, 6)):
            length = rng.randint(6, 16)
            words = []
            for _ in range(length):
                stem = rng.choices(lexicon, weights)[0]
                suffix = rng.choice(SUFFIXES)
                word = stem + suffix
                if rng.random() < 0.02:
                    word = str(rng.randint(0, 9999))
                words.append(word)
            words[0] = words[0].capitalize()
            sentence = " ".join(words)
            if rng.random() < 0.25:
                cut = rng.randint(2, max(2, length - 2))
                sentence = " ".join(words[:cut]) + ", " + " ".join(words[cut:])
            sentence += rng.choices(".!?", weights=[10, 1, 1])[0]
            paragraph.append(sentence)
        chunk = " ".join(paragraph) + "\n\n"
        out.append(chunk)
        size += len(chunk.encode("utf-8"))
    return "".join(out)
