"""Template grammar for generating small labeled slot-filling corpora.

Templates pair a carrier phrase with a slot-bearing body, and several of them
share each semantic frame, so frame clusters contain real paraphrases. Some
carrier/body pairings never appear in training data, which gives test sets
phrasings the tagger has not seen as a whole.
"""

from __future__ import annotations

import random
import re

from .corpus import OUTSIDE_TAG, Corpus, Utterance, bio_tags

CITIES = [
    "boston", "denver", "atlanta", "dallas", "seattle", "chicago", "miami", "phoenix",
    "new york", "san francisco", "los angeles", "salt lake city", "pittsburgh",
    "baltimore", "oakland", "houston",
]

VALUES = {
    "from_city": CITIES,
    "to_city": CITIES,
    "location": CITIES,
    "date": [
        "today", "tomorrow", "monday", "tuesday", "wednesday", "friday", "saturday",
        "sunday", "next week", "this weekend", "june first", "the fifth of may",
    ],
    "airline": [
        "delta", "united", "american airlines", "jet blue", "southwest", "alaska",
        "us air", "continental", "lufthansa", "air canada", "frontier", "spirit",
    ],
    "distance": [
        "nearest", "closest", "quickest", "fastest", "shortest", "cheapest",
        "most convenient", "least busy", "best", "nearest open",
    ],
    "poi_type": [
        "restaurant", "hospital", "gas station", "coffee shop", "grocery store",
        "shopping mall", "pharmacy", "parking garage", "rest stop", "hotel",
        "chinese restaurant", "library",
    ],
    "weather": [
        "sunny", "rainy", "windy", "cloudy", "foggy", "humid", "hot", "cold", "snowy",
        "stormy", "warm", "freezing",
    ],
}

FLIGHT = ["show me flights", "i want to fly", "list flights", "i need a flight",
          "what flights go", "find me a flight", "are there any flights", "book a trip"]
NAV = ["show me", "where is", "find me", "give me directions to", "navigate to",
       "i am looking for", "take me to", "is there"]
WEATHER = ["will it be", "is it going to be", "check if it will be", "tell me if it will be",
           "do you think it will be"]
ROUTE = ["from {from_city} to {to_city}", "to {to_city} from {from_city}",
         "leaving {from_city} and arriving in {to_city}", "out of {from_city} into {to_city}"]

# frame name -> (carriers, bodies); a template is one carrier followed by one body
FRAMES = {
    "route": (FLIGHT, ROUTE),
    "dated_route": (FLIGHT, [f"{r} {d}" for r in ROUTE[:3] for d in ("on {date}", "{date}")]),
    "airline": (["does {airline} fly", "show me {airline} flights", "list {airline} flights",
                 "i want to take {airline}", "is there an {airline} flight"],
                ["to {to_city}", "into {to_city}", "going to {to_city}", "that lands in {to_city}"]),
    "airline_route": (["does {airline} fly", "show me {airline} flights", "is there an {airline} flight",
                       "i want to take {airline}"], ROUTE),
    "nearest": (NAV, ["the {distance} {poi_type}", "a {distance} {poi_type}",
                      "the {poi_type} that is {distance}", "the route to the {distance} {poi_type}"]),
    "poi": (NAV, ["a {poi_type}", "the {poi_type}", "any {poi_type} around here",
                  "some {poi_type} close by"]),
    "poi_location": (NAV, ["a {poi_type} in {location}", "the {poi_type} near {location}",
                           "some {poi_type} around {location}"]),
    "forecast": (WEATHER, ["{weather} in {location} {date}", "{weather} in {location} on {date}",
                           "{weather} {date} in {location}", "{weather} on {date} over {location}"]),
    "weather": (WEATHER, ["{weather} in {location}", "{weather} around {location}",
                          "{weather} over in {location}"]),
    "outlook": (["what is the forecast for", "give me the forecast for", "show me the weather for",
                 "how is the weather looking for"],
                ["{location} on {date}", "{location} {date}", "{date} in {location}"]),
}


def _templates():
    out = []
    for name, (carriers, bodies) in FRAMES.items():
        for i, carrier in enumerate(carriers):
            for j, body in enumerate(bodies):
                # every carrier and every body is seen in training, some pairings are not
                out.append((name, f"{carrier} {body}", (i + j) % 4 != 3))
    return out


# (frame name, template, seen in training)
TEMPLATES = _templates()

PREFIXES = ["please", "hey", "okay", "so", "i wonder"]
SUFFIXES = ["please", "thanks", "right now", "for me"]
AFFIX_PROB = 0.25

_SLOT_RE = re.compile(r"^\{(\w+)\}$")


def expand(template: str, rng: random.Random) -> Utterance:
    tokens, tags = [], []
    for word in template.split():
        m = _SLOT_RE.match(word)
        if m is None:
            tokens.append(word)
            tags.append(OUTSIDE_TAG)
            continue
        slot_type = m.group(1)
        value = rng.choice(VALUES[slot_type]).split()
        tokens.extend(value)
        tags.extend(bio_tags(slot_type, len(value)))
    return Utterance(tuple(tokens), tuple(tags))


def _sample_template(rng: random.Random, templates: dict[str, list[str]]) -> str:
    # pick the frame first so that frame clusters have similar sizes
    words = [rng.choice(templates[rng.choice(sorted(templates))])]
    if rng.random() < AFFIX_PROB:
        words.insert(0, rng.choice(PREFIXES))
    if rng.random() < AFFIX_PROB:
        words.append(rng.choice(SUFFIXES))
    return " ".join(words)


def _sample(rng: random.Random, templates: dict[str, list[str]], n: int, name: str) -> Corpus:
    return Corpus([expand(_sample_template(rng, templates), rng) for _ in range(n)], name)


def synthetic_vectors(dim: int, seed: int = 0, spread: float = 0.3,
                      noise: float = 0.1) -> dict[str, list[float]]:
    """Word vectors standing in for pretrained embeddings over the grammar's words.

    Tokens of one value list share a random centroid and differ by small noise,
    so values of a slot type are near each other as in distributional
    embeddings. Context words (and value tokens that also occur in templates)
    get independent random vectors.
    """
    rng = random.Random(f"{seed}:vectors")
    context = set()
    for _, template, _ in TEMPLATES:
        context.update(w for w in template.split() if not _SLOT_RE.match(w))
    for affix in PREFIXES + SUFFIXES:
        context.update(affix.split())

    def draw(center, sd):
        return [c + rng.gauss(0.0, sd) for c in center]

    vectors = {}
    groups = {}
    for values in VALUES.values():
        groups.setdefault(id(values), values)
    for values in groups.values():
        centroid = draw([0.0] * dim, spread)
        for value in values:
            for tok in value.split():
                if tok not in context and tok not in vectors:
                    vectors[tok] = draw(centroid, noise)
    for tok in sorted(context):
        vectors[tok] = draw([0.0] * dim, spread)
    return vectors


def make_synthetic(seed: int, n_train: int, n_test: int,
                   n_dev: int | None = None) -> tuple[Corpus, Corpus, Corpus]:
    """Sample (train, dev, test) corpora.

    Each split draws from its own seeded stream, so the test set for a given
    seed is the same whatever ``n_train`` is, and smaller training sets are
    prefixes of larger ones.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be >= 1")
    n_dev = n_test if n_dev is None else n_dev
    seen, every = {}, {}
    for frame, template, in_train in TEMPLATES:
        every.setdefault(frame, []).append(template)
        if in_train:
            seen.setdefault(frame, []).append(template)
    train = _sample(random.Random(f"{seed}:train"), seen, n_train, f"synthetic:{seed}:train")
    dev = _sample(random.Random(f"{seed}:dev"), every, n_dev, f"synthetic:{seed}:dev")
    test = _sample(random.Random(f"{seed}:test"), every, n_test, f"synthetic:{seed}:test")
    return train, dev, test
