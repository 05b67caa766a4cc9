#!/usr/bin/env python3
"""Regenerates the synthetic demo assets: POI grid, profile distribution,
demo personas, few-shot bank and the scripted transcript. Run from the
repository root:

    python3 scripts/make_demo_assets.py
"""

import json
import math
import os

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
ASSETS = os.path.join(ROOT, "assets")

CENTER_LAT = 39.90
CENTER_LON = 116.40
KM_PER_DEG = 6371.0 * math.pi / 180.0

CATEGORIES = [
    "restaurant", "cafe", "mall", "supermarket", "gym", "stadium", "park",
    "museum", "cinema", "bar", "hospital", "clinic", "bank", "post office",
    "office", "company", "residential",
]

NAMES = {
    "restaurant": "Restaurant", "cafe": "Cafe", "mall": "Shopping Mall",
    "supermarket": "Supermarket", "gym": "Gym", "stadium": "Stadium",
    "park": "Park", "museum": "Museum", "cinema": "Cinema", "bar": "Bar",
    "hospital": "Hospital", "clinic": "Clinic", "bank": "Bank",
    "post office": "Post Office", "office": "Office Tower",
    "company": "Company Campus", "residential": "Residential Block",
}


def offset(north_km, east_km):
    lat = CENTER_LAT + north_km / KM_PER_DEG
    lon = CENTER_LON + east_km / (KM_PER_DEG * math.cos(math.radians(CENTER_LAT)))
    return lat, lon


def make_pois():
    pois = []
    n = 0
    for north in range(-10, 11):
        for east in range(-10, 11):
            category = CATEGORIES[n % len(CATEGORIES)]
            lat, lon = offset(north, east)
            name = f"{NAMES[category]} {n}"
            if n % 7 == 0:
                name += ", corner unit"  # exercises CSV quoting
            pois.append((f"g{n:04d}", name, category, lat, lon))
            n += 1
    lines = ["id,name,category,lat,lon"]
    for pid, name, category, lat, lon in pois:
        quoted = '"' + name.replace('"', '""') + '"' if "," in name else name
        lines.append(f"{pid},{quoted},{category},{lat:.6f},{lon:.6f}")
    with open(os.path.join(ASSETS, "pois_demo.csv"), "w") as f:
        f.write("\n".join(lines) + "\n")
    return pois


def region_of(pois, pid):
    for p in pois:
        if p[0] == pid:
            return p
    raise KeyError(pid)


def make_profiles(pois):
    residential = [p for p in pois if p[2] == "residential"]
    west = [p[0] for p in residential if p[4] <= CENTER_LON]
    east = [p[0] for p in residential if p[4] > CENTER_LON]
    profiles = {
        "R_west": {
            "weight": 0.7,
            "residential_pois": west,
            "attributes": {
                "gender": {"male": 0.55, "female": 0.45},
                "occupation": {
                    "IT engineer": 0.30, "teacher": 0.25,
                    "sales": 0.25, "retired": 0.20,
                },
                "education": {
                    "bachelor": 0.45, "high school": 0.30, "master": 0.25,
                },
                "income": {
                    "low": 0.20, "medium": 0.50, "high": 0.30,
                },
            },
        },
        "R_east": {
            "weight": 0.3,
            "residential_pois": east,
            "attributes": {
                "gender": {"male": 0.50, "female": 0.50},
                "occupation": {
                    "IT engineer": 0.15, "teacher": 0.20,
                    "sales": 0.35, "retired": 0.30,
                },
                "education": {
                    "bachelor": 0.35, "high school": 0.45, "master": 0.20,
                },
                "income": {
                    "low": 0.35, "medium": 0.45, "high": 0.20,
                },
            },
        },
    }
    with open(os.path.join(ASSETS, "profiles_demo.json"), "w") as f:
        json.dump(profiles, f, indent=2)
        f.write("\n")


def make_personas(pois):
    """Two demo personas whose ids match the bundled transcript."""
    home0 = offset(0, 0)
    work0 = offset(5, 0)
    home1 = offset(1, -2)
    work1 = offset(-4, 3)
    personas = [
        {
            "id": "p0",
            "attributes": {
                "gender": "female", "occupation": "IT engineer",
                "education": "bachelor", "income": "medium",
            },
            "home": {"lat": home0[0], "lon": home0[1]},
            "home_region": "R_west",
            "work": {"lat": work0[0], "lon": work0[1]},
        },
        {
            "id": "p1",
            "attributes": {
                "gender": "male", "occupation": "teacher",
                "education": "master", "income": "medium",
            },
            "home": {"lat": home1[0], "lon": home1[1]},
            "home_region": "R_west",
            "work": {"lat": work1[0], "lon": work1[1]},
        },
    ]
    with open(os.path.join(ASSETS, "personas_demo.jsonl"), "w") as f:
        for p in personas:
            f.write(json.dumps(p) + "\n")


FEWSHOT = [
    ("office worker, regular hours",
     [("00:00", "07:10", "sleep", "weekday night"),
      ("07:30", "08:05", "eat", "breakfast near home"),
      ("08:40", "17:30", "go to work", "core office hours"),
      ("18:10", "19:00", "eat", "dinner on the way back"),
      ("19:30", "23:59", "go home", "quiet evening in")]),
    ("shift nurse",
     [("00:00", "06:00", "sleep", "short night before the early shift"),
      ("06:40", "15:00", "go to work", "morning shift"),
      ("15:30", "16:20", "eat", "late lunch"),
      ("16:40", "18:00", "do sports", "gym to unwind"),
      ("18:30", "23:59", "go home", "rest before the next shift")]),
    ("retired, lives alone",
     [("00:00", "06:30", "sleep", "early riser"),
      ("07:00", "08:00", "eat", "breakfast at the corner cafe"),
      ("08:30", "10:30", "do sports", "morning walk in the park"),
      ("11:00", "12:00", "do shopping", "groceries"),
      ("12:30", "23:59", "go home", "afternoon and evening at home")]),
    ("graduate student",
     [("00:00", "08:50", "sleep", "late night studying"),
      ("09:30", "12:00", "go to work", "lab in the morning"),
      ("12:10", "12:50", "eat", "campus canteen"),
      ("13:00", "18:30", "go to work", "back to the lab"),
      ("19:00", "21:00", "leisure or entertainment", "film with friends"),
      ("21:30", "23:59", "go home", "home late")]),
    ("freelance designer",
     [("00:00", "09:00", "sleep", "flexible schedule"),
      ("09:40", "10:20", "eat", "brunch"),
      ("10:40", "12:30", "handle the trivialities of life", "bank and paperwork"),
      ("13:00", "18:00", "go to work", "studio time"),
      ("18:40", "23:59", "go home", "works from home in the evening")]),
    ("parent of two",
     [("00:00", "06:20", "sleep", "up before the kids"),
      ("06:40", "07:20", "eat", "family breakfast"),
      ("08:00", "16:30", "go to work", "leaves right after drop-off"),
      ("17:00", "18:00", "do shopping", "supermarket run"),
      ("18:30", "23:59", "go home", "family evening")]),
    ("weekend hiker profile",
     [("00:00", "07:40", "sleep", "no alarm"),
      ("08:20", "09:00", "eat", "big breakfast before heading out"),
      ("09:30", "16:00", "excursion", "day trip to the hills"),
      ("16:40", "17:30", "eat", "early dinner on the way back"),
      ("18:00", "23:59", "go home", "tired evening")]),
    ("clinic regular, chronic condition",
     [("00:00", "07:00", "sleep", "steady nights"),
      ("07:30", "08:10", "eat", "breakfast"),
      ("09:00", "10:30", "medical treatment", "scheduled check-up"),
      ("11:00", "12:00", "do shopping", "pharmacy and groceries"),
      ("12:30", "23:59", "go home", "rests at home")]),
]


def make_fewshot():
    examples = []
    for profile, events in FEWSHOT:
        examples.append({
            "profile": profile,
            "events": [
                {"start": s, "end": e, "intention": i, "rationale": r}
                for s, e, i, r in events
            ],
        })
    with open(os.path.join(ASSETS, "fewshot.json"), "w") as f:
        json.dump({"examples": examples}, f, indent=2)
        f.write("\n")


# The worked example day replayed by the scripted backend for both demo
# personas: sleep, work, eat, shopping, home.
DAY = [
    ("(00:00, 08:33)", "sleep"),
    ("(09:47, 17:49)", "go to work"),
    ("(18:45, 19:49)", "eat"),
    ("(20:01, 20:35)", "do shopping"),
    ("(21:40, 23:59)", "go home"),
]

PBC_LINES = [
    "⟨Perceived likelihood⟩: [sleep:0.9, go to work:0.1, go home:0.1, eat:0.2, do shopping:0.1, do sports:0.1, excursion:0.1, leisure or entertainment:0.1, medical treatment:0.1, handle the trivialities of life:0.1]",
    "⟨Perceived likelihood⟩: [go to work:0.9, eat:0.4, do sports:0.2, sleep:0.1, go home:0.1, do shopping:0.2, excursion:0.1, leisure or entertainment:0.2, medical treatment:0.1, handle the trivialities of life:0.2]",
    "⟨Perceived likelihood⟩: [eat:0.9, go home:0.5, do shopping:0.4, leisure or entertainment:0.4, sleep:0.2, go to work:0.1, do sports:0.3, excursion:0.1, medical treatment:0.1, handle the trivialities of life:0.3]",
    "⟨Perceived likelihood⟩: [do shopping:0.8, go home:0.6, leisure or entertainment:0.5, eat:0.2, sleep:0.3, go to work:0.1, do sports:0.2, excursion:0.1, medical treatment:0.1, handle the trivialities of life:0.3]",
    "⟨Perceived likelihood⟩: [go home:0.9, sleep:0.7, leisure or entertainment:0.3, eat:0.1, do shopping:0.2, go to work:0.1, do sports:0.1, excursion:0.1, medical treatment:0.1, handle the trivialities of life:0.1]",
]


def make_transcript():
    entries = []
    for persona in ("p0", "p1"):
        entries.append({
            "tag": "a", "persona_id": persona, "turn": 0,
            "response": "⟨Preference⟩: [enjoys dining out after work, prefers shops close to dinner spots, values a full night of sleep]",
            "prompt_tokens": 900, "completion_tokens": 40,
        })
        entries.append({
            "tag": "b", "persona_id": persona, "turn": 0,
            "response": "⟨Routine⟩: [office hours roughly 09:45 to 17:49 on weekdays, dinner out around 19:00, home before midnight]",
            "prompt_tokens": 850, "completion_tokens": 35,
        })
        for turn, line in enumerate(PBC_LINES):
            entries.append({
                "tag": "c", "persona_id": persona, "turn": turn,
                "response": line, "prompt_tokens": 500, "completion_tokens": 50,
            })
        for turn, (window, intention) in enumerate(DAY):
            entries.append({
                "tag": "d", "persona_id": persona, "turn": turn,
                "response": intention, "prompt_tokens": 600, "completion_tokens": 10,
            })
            entries.append({
                "tag": "t", "persona_id": persona, "turn": turn,
                "response": window, "prompt_tokens": 350, "completion_tokens": 12,
            })
    with open(os.path.join(ASSETS, "transcript_demo.jsonl"), "w") as f:
        for e in entries:
            f.write(json.dumps(e, ensure_ascii=False) + "\n")


def main():
    os.makedirs(ASSETS, exist_ok=True)
    pois = make_pois()
    make_profiles(pois)
    make_personas(pois)
    make_fewshot()
    make_transcript()
    print("demo assets written to", ASSETS)


if __name__ == "__main__":
    main()
