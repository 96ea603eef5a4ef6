"""Template-generated labeled policy sentences.

Used as a stand-in training corpus when no annotated policy data is at hand.
Each sentence pairs a data practice phrase with varied subjects, verbs and
purposes; about a fifth of the permission sentences mention two data types.
"""
from __future__ import annotations

import numpy as np

from .corpus import LabeledSentence, PERMISSIONS, PermissionClass

P = PermissionClass

DATA_PHRASES = {
    P.AMAZON_PAY: [
        "Amazon Pay payment details", "payment information processed by Amazon Pay",
        "Amazon Pay transaction records", "billing details from Amazon Pay",
        "Amazon Pay account information", "purchase information handled through Amazon Pay",
    ],
    P.DEVICE_ADDRESS: [
        "device address", "street address of your Echo device", "full address of your device",
        "home street address", "device's full street address", "address associated with your Alexa device",
        "devices address",
    ],
    P.DEVICE_COUNTRY_POSTAL_CODE: [
        "country and postal code", "zip code", "postal code of your device", "postcode and country",
        "device's country and zip code", "ZIP code associated with your device", "postal address",
    ],
    P.EMAIL_ADDRESS: [
        "email address", "e-mail address", "email", "Amazon account email address",
        "email contact details", "primary email address",
    ],
    P.LOCATION_SERVICES: [
        "current location", "real-time geolocation", "GPS location", "precise geographic location",
        "location data from location services", "device's current geolocation",
    ],
    P.MOBILE_NUMBER: [
        "mobile number", "phone number", "mobile phone number", "cell phone number",
        "telephone number", "contact number",
    ],
    P.NAME: [
        "name", "first name", "full name", "given name", "first and last name", "customer name",
    ],
    P.PERSONAL_INFORMATION: [
        "personal information", "personally identifiable information", "personal data",
        "personal details", "information that identifies you", "personal identifiers",
    ],
}

PLURAL_SUBJECTS = ["We", "We and our partners", "Our servers"]
SINGULAR_SUBJECTS = [
    "The skill", "This skill", "Our service", "Our company", "The application", "Our team",
    "The developer", "Our Alexa skill",
]
VERBS = [
    "collect your", "may collect your", "receive your", "access your", "store your",
    "request your", "process your", "obtain your", "use your", "gather your", "ask for your",
    "keep a record of your",
]
PURPOSES = [
    "to provide the service", "to personalize your experience", "when you enable the skill",
    "in order to fulfil your request", "to create your account", "for customer support",
    "to send you updates", "to improve our features", "with your permission",
    "as described in this policy", "when you link your account", "to deliver your order",
    "", "for the purposes listed below", "so the skill works correctly",
]

NONE_SENTENCES = [
    "{s} use cookies to analyze traffic on our website{p}.",
    "{s} may update this privacy policy from time to time{p}.",
    "Changes to this policy take effect when posted on this page{p}.",
    "{s} use industry standard encryption to protect data in transit{p}.",
    "This policy is governed by the laws of the State of {state}{p}.",
    "Children under {age} should not use this skill{p}.",
    "By using this skill you agree to the terms of service{p}.",
    "{s} retain server logs for security purposes for {days} days{p}.",
    "Third party analytics providers may set cookies in your browser{p}.",
    "Please review this policy periodically for updates{p}.",
    "{s} store game scores in a leaderboard{p}.",
    "Your continued use of the service means you accept these changes{p}.",
    "{s} are committed to protecting your privacy{p}.",
    "This policy was last updated in {month}{p}.",
    "Our service is intended for general audiences{p}.",
    "{s} rely on Amazon to host the voice interaction{p}.",
    "Information is stored on servers located in {country}{p}.",
    "Aggregated statistics may be shared with our business partners{p}.",
    "The skill plays music and sound effects on request{p}.",
    "Usage data helps us understand which features are popular{p}.",
    "{s} respond to lawful requests from public authorities{p}.",
    "Security measures are reviewed on a regular basis{p}.",
    "Users may opt out of marketing messages at any time{p}.",
    "Links to other websites are not covered by this policy{p}.",
    "The skill runs on your Echo device{p}.",
    "Audio is played through the speaker of your device{p}.",
    "Settings can be changed in the Alexa app on your phone{p}.",
    "Your device must be connected to the internet to use the skill{p}.",
    "{s} support the skill on every Alexa enabled device{p}.",
    "Your account settings control which notifications you receive{p}.",
]
NONE_FILLERS = {
    "state": ["California", "New York", "Texas", "Washington", "Delaware", "Florida"],
    "age": ["13", "16", "18"],
    "days": ["7", "14", "30", "60", "90", "180"],
    "month": ["January", "March", "May", "July", "September", "November"],
    "country": ["the United States", "Ireland", "Germany", "Canada", "India", "Japan"],
}
NONE_OPENERS = [
    "", "Please note that ", "In addition, ", "For clarity, ", "Generally, ", "As a rule, ",
    "In some cases, ", "Where applicable, ",
]
NONE_SUFFIXES = [
    "", " and elsewhere", " where required", " without notice", " as needed",
    " in accordance with applicable law", " during normal operation", " for our records",
]


def _third_person(verb: str) -> str:
    head, _, rest = verb.partition(" ")
    if head != "may":
        head = head + "es" if head.endswith(("s", "sh", "ch")) else head + "s"
    return f"{head} {rest}"


def _perm_sentence(classes, rng: np.random.Generator) -> str:
    phrases = [DATA_PHRASES[c][rng.integers(len(DATA_PHRASES[c]))] for c in classes]
    subjects = PLURAL_SUBJECTS + SINGULAR_SUBJECTS
    k = int(rng.integers(len(subjects)))
    subject = subjects[k]
    verb = VERBS[rng.integers(len(VERBS))]
    if k >= len(PLURAL_SUBJECTS):
        verb = _third_person(verb)
    purpose = PURPOSES[rng.integers(len(PURPOSES))]
    data = " and your ".join(phrases)
    tail = f" {purpose}" if purpose else ""
    return f"{subject} {verb} {data}{tail}."


def _none_sentence(rng: np.random.Generator) -> str:
    template = NONE_SENTENCES[rng.integers(len(NONE_SENTENCES))]
    fill = {k: v[rng.integers(len(v))] for k, v in NONE_FILLERS.items()}
    fill["s"] = ["We", "Our partners", "Our engineers", "Our staff"][rng.integers(4)]
    fill["p"] = NONE_SUFFIXES[rng.integers(len(NONE_SUFFIXES))]
    text = template.format(**fill)
    opener = NONE_OPENERS[rng.integers(len(NONE_OPENERS))]
    if opener and not text.startswith("Please"):
        text = opener + text[0].lower() + text[1:]
    return text


def synthetic_corpus(per_class: int = 2000, seed: int = 7, multi_label_share: float = 0.2,
                     max_tries: int = 200_000) -> list[LabeledSentence]:
    """At least ``per_class`` distinct sentences carrying each of the 9 labels."""
    rng = np.random.default_rng(seed)
    seen: set[str] = set()
    out: list[LabeledSentence] = []
    counts = {c: 0 for c in PERMISSIONS}

    def add(text, labels):
        if text in seen:
            return
        seen.add(text)
        out.append(LabeledSentence(text, frozenset(labels), "synthetic"))
        for c in labels:
            if c in counts:
                counts[c] += 1

    tries = 0
    for cls in PERMISSIONS:
        while counts[cls] < per_class:
            tries += 1
            if tries > max_tries:
                raise RuntimeError("template space exhausted; lower per_class")
            labels = [cls]
            if rng.random() < multi_label_share:
                other = PERMISSIONS[rng.integers(len(PERMISSIONS))]
                if other is not cls:
                    labels.append(other)
            add(_perm_sentence(labels, rng), labels)
    n_none = 0
    while n_none < per_class:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("template space exhausted; lower per_class")
        before = len(out)
        add(_none_sentence(rng), [P.NONE])
        n_none += len(out) - before
    return out
