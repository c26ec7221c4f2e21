"""Fake-data isolation and social signal processing for probe messages.

Stage I scores message text with hand-weighted content features and flags
anything at or above ``FSDI_THRESHOLD`` as fake.  Stage II keeps text that
states the sender's present location next to a known landmark and turns it
into a position.  GPS fixes skip both stages.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np

LANDMARK_RADIUS = 150.0
FSDI_THRESHOLD = 1.0


@dataclass
class SocialMessage:
    id: int
    vehicle: int
    t_emit: float
    t_recv: float
    kind: str  # "gps" | "text"
    payload: object  # float position for gps, str for text
    truth_label: str = "legit"  # "legit" | "fake"
    truth_x: float = float("nan")
    category: str = ""
    fsdi_verdict: Optional[str] = None
    fsdi_score: Optional[float] = None
    relevance: Optional[str] = None
    x_est: Optional[float] = None
    x_sigma: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)

    @classmethod
    def from_json(cls, line: str) -> "SocialMessage":
        return cls(**json.loads(line))


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


@dataclass(frozen=True)
class Landmark:
    name: str
    x: float

    @property
    def tokens(self) -> frozenset:
        return frozenset(_tokens(self.name))


class LandmarkTable:
    def __init__(self, entries: Iterable[Landmark], L: float | None = None):
        self.entries = list(entries)
        names = [e.name.lower() for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("landmark names must be unique")
        if L is not None:
            bad = [e.name for e in self.entries if not 0 <= e.x <= L]
            if bad:
                raise ValueError(f"landmarks outside [0, L]: {bad}")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def find_in(self, text: str) -> Optional[Landmark]:
        """Landmark whose full token set appears in ``text`` (longest name wins)."""
        toks = set(_tokens(text))
        hits = [e for e in self.entries if e.tokens <= toks]
        return max(hits, key=lambda e: len(e.tokens)) if hits else None

    def overlaps(self, phrase: str) -> bool:
        toks = set(_tokens(phrase)) - _STOPWORDS
        return any(toks and toks <= e.tokens for e in self.entries)

    def nearest(self, z: float, radius: float = LANDMARK_RADIUS) -> Optional[Landmark]:
        best = min(self.entries, key=lambda e: abs(e.x - z), default=None)
        if best is None or abs(best.x - z) > radius:
            return None
        return best

    @classmethod
    def default(cls, L: float = 1000.0) -> "LandmarkTable":
        names = [
            "Pho 11 Vietnamese Restaurant", "Shell Gas Station", "Maple Street Exit",
            "Riverside Mall", "Lincoln Memorial Hospital", "Oak Park Bridge",
            "Central Public Library", "Harbor Stadium",
        ]
        xs = np.linspace(0.06 * L, 0.97 * L, len(names))
        return cls([Landmark(n, float(round(x, 3))) for n, x in zip(names, xs)], L)


_STOPWORDS = {"the", "a", "an", "of", "and", "in", "on"}

# text generation --------------------------------------------------------

PRESENT_TEMPLATES = (
    "I'm near {lm}",
    "Stuck in traffic near {lm}",
    "Just passing {lm} now",
    "Driving by {lm} right now",
    "Currently at {lm}, traffic is moving",
    "Approaching {lm}, slow lane ahead",
    "We're near {lm} on the freeway",
)
CHATTER_TEMPLATES = (
    "Last night party at {short} was a blast",
    "#{tag} @{lm} is terrific!",
    "Had dinner at {lm} yesterday",
    "Went to {lm} last weekend with the kids",
    "Can't wait to visit {lm} next week",
    "{lm} has the friendliest staff in town",
)
BENIGN_LINK_TEMPLATES = (
    "Traffic pic near {lm} https://instagram.com/p/{code}",
    "Passing {lm} now, live map https://maps.example.org/{code}",
    "Traffic update near {lm} https://www.citynews.com/traffic/{code}",
)
SPAM_LINKS = (
    "http://bit.ly/{code}", "https://tinyurl.com/{code}", "http://win-prizes.biz/{code}",
    "www.cheap-deals.club/{code}", "http://goo.gl/{code}",
)
TOO_GOOD_TEMPLATES = (
    "FREE gas for a year near {lm}!!! Guaranteed winner, claim your prize",
    "Congratulations! You won $1000 cash, pick it up near {lm} today",
    "100% free iPhone giveaway at {lm}, limited time only!!!",
    "Win a brand new car instantly, just drive past {lm}! Act now",
)
FAKE_LANDMARKS = (
    "Golden Dragon Palace", "Sunset Pier Nine", "Empire State Building",
    "Crystal Lake Casino", "Blue Whale Aquarium", "Grand Canyon Lodge",
)
FAKE_TWEET_TEMPLATES = (
    "{lm} giving away free meals today, retweet to claim yours",
    "For every retweet we donate $5 to crash victims near {lm}",
    "Retweet this and {lm} will send you a gift card",
    "Share and follow to get a free car wash at {lm}, donation matched",
)
SUBTLE_FAKE_TEMPLATES = (
    "I'm near the old {fake_lower} place",
    "Stuck near {fake_lower} again",
)
CORRUPTIONS = ("spam_link", "too_good", "fake_landmark", "fake_tweet")
HASHTAGS = ("Beef", "Pho", "Foodie", "Weekend", "Traffic")


def _code(rng: np.random.Generator) -> str:
    alphabet = "abcdefghijkmnpqrstuvwxyz23456789"
    return "".join(alphabet[i] for i in rng.integers(0, len(alphabet), 6))


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def legit_text(lm: Landmark, rng: np.random.Generator, present: bool = True,
               benign_link_rate: float = 0.0) -> tuple[str, str]:
    """Legitimate text; returns ``(text, category)``."""
    if present:
        if benign_link_rate and rng.random() < benign_link_rate:
            return _pick(rng, BENIGN_LINK_TEMPLATES).format(lm=lm.name, code=_code(rng)), "present_link"
        return _pick(rng, PRESENT_TEMPLATES).format(lm=lm.name), "present"
    short = " ".join(lm.name.split()[:2]).lower()
    tpl = _pick(rng, CHATTER_TEMPLATES)
    return tpl.format(lm=lm.name, short=short, tag=_pick(rng, HASHTAGS)), "chatter"


def fake_text(category: str, lm: Landmark, rng: np.random.Generator,
              subtle_rate: float = 0.0) -> str:
    if category == "spam_link":
        base = _pick(rng, PRESENT_TEMPLATES).format(lm=lm.name)
        return f"{base} {_pick(rng, SPAM_LINKS).format(code=_code(rng))}"
    if category == "too_good":
        return _pick(rng, TOO_GOOD_TEMPLATES).format(lm=lm.name)
    if category == "fake_landmark":
        fake = _pick(rng, FAKE_LANDMARKS)
        if subtle_rate and rng.random() < subtle_rate:
            return _pick(rng, SUBTLE_FAKE_TEMPLATES).format(fake_lower=fake.lower())
        return _pick(rng, PRESENT_TEMPLATES).format(lm=fake)
    if category == "fake_tweet":
        return _pick(rng, FAKE_TWEET_TEMPLATES).format(lm=lm.name)
    raise ValueError(f"unknown corruption {category!r}")


def generate_corpus(n: int, fake_fraction: float, landmarks: LandmarkTable, seed: int,
                    present_rate: float = 0.6, benign_link_rate: float = 0.03,
                    subtle_rate: float = 0.1) -> list[SocialMessage]:
    """Labeled synthetic text corpus; fakes cycle uniformly over the four corruptions."""
    if n <= 0:
        raise ValueError("n must be > 0")
    if not 0.0 <= fake_fraction <= 1.0:
        raise ValueError("fake_fraction must lie in [0, 1]")
    if len(landmarks) == 0:
        raise ValueError("landmark table is empty")
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        lm = _pick(rng, landmarks.entries)
        truth_x = float(lm.x + rng.uniform(-LANDMARK_RADIUS, LANDMARK_RADIUS))
        if rng.random() < fake_fraction:
            cat = _pick(rng, CORRUPTIONS)
            text, label = fake_text(cat, lm, rng, subtle_rate), "fake"
        else:
            text, cat = legit_text(lm, rng, rng.random() < present_rate, benign_link_rate)
            label = "legit"
        out.append(SocialMessage(k, -1, 0.0, 0.0, "text", text, label, truth_x, cat))
    return out


# Stage I ---------------------------------------------------------------

_URL = re.compile(r"(https?://|www\.)\S+", re.I)
_SHORTENERS = ("bit.ly", "tinyurl", "goo.gl", "t.co/", "ow.ly")
_SPAM_TLDS = (".biz", ".club", ".xyz", ".top", ".win")
_TRUSTED_HOSTS = ("instagram.com", "maps.example.org")
_TOO_GOOD = re.compile(
    r"\b(free|win|won|winner|guaranteed|prize|giveaway|giving away|cash|lottery|"
    r"limited time|act now|instantly|100%|congratulations)\b|\$\d+", re.I)
_BAIT = re.compile(r"\b(retweet|rt to|share and follow|follow and share|donate|donation|gift card)\b", re.I)
_PLACE = re.compile(r"(?i:\bnear|\bat|\bpassing|\bby|\bapproaching|@)\s*((?:[A-Z0-9][\w']*\s?){1,5})")


def fsdi_features(text: str, landmarks: LandmarkTable) -> dict:
    feats = dict(url=0.0, shortener=0.0, too_good=0.0, bait=0.0, unknown_place=0.0, shouting=0.0)
    for m in _URL.finditer(text):
        url = m.group(0).lower()
        if any(h in url for h in _TRUSTED_HOSTS):
            continue
        feats["url"] = 1.0
        if any(s in url for s in _SHORTENERS) or any(t in url for t in _SPAM_TLDS):
            feats["shortener"] = 1.0
    feats["too_good"] = float(len(_TOO_GOOD.findall(text)))
    feats["bait"] = float(len(_BAIT.findall(text)))
    for m in _PLACE.finditer(text):
        phrase = m.group(1).strip()
        if phrase and not landmarks.overlaps(phrase) and not phrase.isdigit():
            feats["unknown_place"] = 1.0
    if text.count("!") >= 3:
        feats["shouting"] = 1.0
    return feats


FSDI_WEIGHTS = dict(url=1.0, shortener=0.5, too_good=0.45, bait=1.0, unknown_place=1.0, shouting=0.3)


def classify_fsdi(message: SocialMessage, landmarks: LandmarkTable,
                  threshold: float = FSDI_THRESHOLD) -> tuple[str, float]:
    """Return ``(verdict, score)``; GPS fixes pass as legit with score 0."""
    if message.kind == "gps":
        return "legit", 0.0
    feats = fsdi_features(str(message.payload), landmarks)
    score = sum(FSDI_WEIGHTS[k] * v for k, v in feats.items())
    return ("fake" if score >= threshold else "legit"), score


@dataclass
class ClassifierMetrics:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total

    @property
    def sensitivity(self) -> float:
        pos = self.tp + self.fn
        return self.tp / pos if pos else 1.0

    def csv_row(self) -> str:
        return f"{self.tp},{self.fp},{self.tn},{self.fn},{self.accuracy!r},{self.sensitivity!r}"

    CSV_HEADER = "tp,fp,tn,fn,accuracy,sensitivity"


def evaluate_classifier(corpus, predictions=None, landmarks: LandmarkTable | None = None) -> ClassifierMetrics:
    """Confusion counts with "fake" as the positive class.

    ``predictions`` defaults to each message's ``fsdi_verdict``, computing
    it with :func:`classify_fsdi` when missing.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")
    if predictions is None:
        predictions = []
        for m in corpus:
            if m.fsdi_verdict is None:
                m.fsdi_verdict, m.fsdi_score = classify_fsdi(m, landmarks or LandmarkTable.default())
            predictions.append(m.fsdi_verdict)
    tp = fp = tn = fn = 0
    for m, p in zip(corpus, predictions, strict=True):
        fake = m.truth_label == "fake"
        if p == "fake":
            tp, fp = (tp + 1, fp) if fake else (tp, fp + 1)
        else:
            fn, tn = (fn + 1, tn) if fake else (fn, tn + 1)
    return ClassifierMetrics(tp, fp, tn, fn)


# Stage II --------------------------------------------------------------

_PRESENT_CUE = re.compile(
    r"\b(i'?m|i am|we'?re|we are|currently|right now|now|just passing|stuck|driving|heading|approaching)\b", re.I)
_PROXIMITY = re.compile(r"\b(near|at|passing|by|approaching|past)\b", re.I)
_PAST_CUE = re.compile(
    r"\b(last (night|week|weekend|year)|yesterday|ago|was|were|went|had|visited)\b", re.I)


def is_relevant(message: SocialMessage, landmarks: LandmarkTable) -> str:
    """"relevant" iff the text places the sender at a known landmark now."""
    if message.kind == "gps":
        return "relevant"
    text = str(message.payload)
    if landmarks.find_in(text) is None:
        return "irrelevant"
    if _PAST_CUE.search(text) or not _PRESENT_CUE.search(text) or not _PROXIMITY.search(text):
        return "irrelevant"
    return "relevant"


def extract_position(message: SocialMessage, landmarks: LandmarkTable,
                     sigma_gps: float) -> tuple[float, float]:
    if message.kind == "gps":
        return float(message.payload), float(sigma_gps)
    lm = landmarks.find_in(str(message.payload))
    if lm is None:
        raise LookupError(f"message {message.id}: no known landmark in text")
    return lm.x, LANDMARK_RADIUS


def process_message(message: SocialMessage, landmarks: LandmarkTable, sigma_gps: float,
                    L: float) -> SocialMessage:
    """Run both stages in order; positions are only ever taken from legit, relevant data."""
    message.fsdi_verdict, message.fsdi_score = classify_fsdi(message, landmarks)
    if message.fsdi_verdict != "legit":
        message.relevance = None
        return message
    message.relevance = is_relevant(message, landmarks)
    if message.relevance == "relevant":
        x, sig = extract_position(message, landmarks, sigma_gps)
        message.x_est = min(max(x, 0.0), L)
        message.x_sigma = sig
    return message
