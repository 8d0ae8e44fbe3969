#!/usr/bin/env python3
"""Builds the benchmark fixtures and workload.

Writes one directory per source under fixtures/sources/, the catalog
document, and workload.json. Answers in the workload are computed from the
generator's own records, not by running queries.

    python3 fixtures/generate.py
"""

import json
import random
import shutil
from datetime import date, timedelta
from pathlib import Path

ROOT = Path(__file__).resolve().parent
SOURCES = ROOT / "sources"
REFERENCE_DATE = date(2026, 10, 16)
UNIVERSITY = "Northfield University"
DOMAIN = "northfield.edu"
ME = "jordan.avery@northfield.edu"

rng = random.Random(20261016)

FIRST = """Ada Alan Amara Anders Beatriz Bjorn Carmen Chidi Dana Dmitri Elena Emeka
Farah Felix Greta Hana Hiro Ines Ivan Jun Kaito Karin Lars Leila Malik Marta
Mateo Mei Nadia Nikolai Noor Oskar Paula Priya Quentin Rafael Rosa Samir Sofia
Tariq Tomas Uma Valentina Viktor Wen Xiomara Yara Yusuf Zofia Zoltan""".split()
LAST = """Abara Bergstrom Castellanos Dahl Eriksen Fontaine Galdos Haddad Ishikawa
Jankowski Kowalczyk Lindqvist Moreau Nakamura Okafor Petrov Quispe Rahman
Salonen Takahashi Ueda Vasquez Whitlock Xu Yilmaz Zeller Arnaud Brandt Coelho
Duarte Esposito Falk Grünewald Holm Iyer Jensen Kaur Lund Mbeki Novak Olsen
Pires Rossi Sato Tanaka Varga Weiss Yamada Ziegler""".split()

_used = set()


def person():
    while True:
        name = f"{rng.choice(FIRST)} {rng.choice(LAST)}"
        if name not in _used:
            _used.add(name)
            return name


def slug(s):
    return "".join(c if c.isalnum() else "_" for c in s).strip("_")


def day(s):
    return date.fromisoformat(s)


# ---------------------------------------------------------------------------
# University data warehouse

TITLES = ["Professor"] * 30 + ["Associate Professor"] * 12 + ["Assistant Professor"] * 8
DEPARTMENTS = ["Computer Science", "Physics", "Chemistry", "Mathematics", "Biology"]
HONORIFICS = {3: "Dr. ", 11: "Prof. ", 19: "Dr. ", 27: "Dr. ", 38: "Prof. "}

faculty = []
for i, title in enumerate(TITLES):
    name = person()
    hired = date(1995, 1, 1) + timedelta(days=rng.randrange(0, 6000))
    faculty.append({
        "faculty_id": 1000 + i,
        "full_name": HONORIFICS.get(i, "") + name,
        "plain_name": name,
        "title": title,
        "lab": "Research Lab",
        "department": DEPARTMENTS[i % len(DEPARTMENTS)],
        "hired": hired.isoformat(),
        "email": f"{slug(name).lower().replace('_', '.')}@{DOMAIN}",
    })
# Full professors carry a promotion date.
for f in faculty:
    if f["title"] == "Professor":
        hired = day(f["hired"])
        f["promoted"] = (hired + timedelta(days=rng.randrange(1500, 3000))).isoformat()

# Award holders among the faculty. Index 3 and 11 carry honorifics in the
# warehouse, so matching them needs entity normalization.
FACULTY_AWARDS = {
    3: ("Turing Award", 2011),
    11: ("Nobel Prize in Physics", 2016),
    20: ("Turing Award", 2019),
    33: ("Nobel Prize in Chemistry", 2009),
    7: ("Fields Medal", 2014),
    41: ("Fields Medal", 2018),
}

staff = []
for i in range(40):
    name = person()
    staff.append({
        "staff_id": 5000 + i,
        "full_name": name,
        "role": rng.choice(["Lab Manager", "Technician", "Administrator", "Coordinator"]),
        "department": rng.choice(DEPARTMENTS),
    })

BUILDING_NAMES = """Halvorsen Hall|Mercer Hall|Okonkwo Library|Tamsin Laboratories|Brightwater Center|
Ellery Hall|Fenwick Annex|Galloway Tower|Harrow Science Building|Ingram Hall|Juniper House|Kestrel Hall|
Linden Commons|Marlow Hall|Northgate Pavilion|Orchard Hall|Penrose Building|Quarry Hall|Ravel Auditorium|
Sable Hall|Thornbury Hall|Underhill Gym|Vantage Hall|Wexford Hall|Yardley Studio""".replace("\n", "").split("|")
WITH_PAGE = ["Halvorsen Hall", "Okonkwo Library", "Galloway Tower", "Penrose Building",
             "Ravel Auditorium", "Tamsin Laboratories", "Linden Commons"]
# Same titles as campus buildings, but the pages describe places elsewhere.
HOMONYM_PAGES = ["Mercer Hall", "Kestrel Hall", "Quarry Hall", "Wexford Hall", "Sable Hall"]
STREETS = ["Larch Street", "Birch Avenue", "College Road", "Mill Lane", "Harbor Way"]

buildings = []
for i, name in enumerate(BUILDING_NAMES):
    code = "".join(w[0] for w in name.split()).upper() + f"{i:02d}"
    buildings.append({
        "building_name": name,
        "building_code": code,
        "campus": "Main" if i % 3 else "North",
        "year_built": 1890 + rng.randrange(0, 130),
        "floors": rng.randrange(2, 9),
        "address": f"{10 + 7 * i} {STREETS[i % len(STREETS)]}",
    })
BUILDING = {b["building_name"]: b for b in buildings}
TARGET = "Halvorsen Hall"

rooms = []
for b in buildings:
    prefix = "".join(w[0] for w in b["building_name"].split()).upper()
    n = 8 if b["building_name"] == TARGET else rng.randrange(3, 6)
    for k in range(n):
        rooms.append({
            "room_id": f"{prefix}{b['building_code'][-2:]}-{100 + 10 * k + rng.randrange(0, 9)}",
            "building_name": b["building_name"],
            "floor": 1 + k % b["floors"],
            "capacity": rng.choice([12, 20, 30, 45, 60, 120]),
            "room_type": rng.choice(["lab", "office", "seminar", "lecture"]),
        })
rooms_by_building = {}
for r in rooms:
    rooms_by_building.setdefault(r["building_name"], []).append(r)

NEWSLETTER_TOPICS = ["Research Digest", "Campus Weekly", "Library News", "Alumni Update",
                     "Graduate Bulletin", "Arts Calendar", "Athletics Report", "Sustainability Notes",
                     "Tech Services Notices", "Faculty Forum", "International Office News",
                     "Health and Wellness"]
newsletters = []
for i, topic in enumerate(NEWSLETTER_TOPICS):
    newsletters.append({
        "newsletter_name": f"Northfield {topic}",
        "list_address": f"{slug(topic).lower().replace('_', '-')}@lists.{DOMAIN}",
        "department": rng.choice(DEPARTMENTS + ["Communications", "Student Affairs"]),
        "frequency": rng.choice(["weekly", "monthly", "biweekly"]),
    })
SUBSCRIBED = [0, 2, 5, 9]

departments = [{"department_name": d, "building_name": buildings[i * 2]["building_name"],
                "chair": faculty[i]["full_name"]} for i, d in enumerate(DEPARTMENTS)]

courses = []
for i in range(60):
    courses.append({
        "course_code": f"{DEPARTMENTS[i % 5][:3].upper()}{100 + i * 3}",
        "course_title": f"Topics in {DEPARTMENTS[i % 5]} {i}",
        "credits": rng.choice([3, 4]),
        "instructor_id": faculty[rng.randrange(len(faculty))]["faculty_id"],
    })

# Enterprise-style tables so the warehouse has the breadth of a real one.
AREAS = ["hr", "fin", "reg", "lib", "it", "adm", "fac", "aid", "dev", "ath", "hsg", "pur"]
ENTITIES = ["accounts", "budget_lines", "vendors", "requests", "audit_log", "cost_centers",
            "contracts", "assets", "tickets", "licenses", "policies", "periods"]
FILLER_COLUMNS = [
    ("record_id", "integer"), ("label", "text"), ("status", "text"), ("amount", "real"),
    ("opened", "date"), ("active", "boolean"),
]
core_tables = ["faculty", "staff", "buildings", "rooms", "newsletters", "departments", "courses"]
filler_names = []
for e in ENTITIES:
    for a in AREAS:
        filler_names.append(f"{a}_{e}")
rng.shuffle(filler_names)
filler_names = sorted(filler_names[: 97 - len(core_tables)])


def filler_rows(name):
    rows = []
    for k in range(rng.randrange(2, 6)):
        rows.append({
            "record_id": k + 1,
            "label": f"{name.replace('_', ' ')} {k + 1}",
            "status": rng.choice(["open", "closed", "pending"]),
            "amount": round(rng.uniform(10, 5000), 2),
            "opened": (date(2020, 1, 1) + timedelta(days=rng.randrange(0, 2000))).isoformat(),
            "active": rng.random() < 0.5,
        })
    return rows


# ---------------------------------------------------------------------------
# Wikipedia stand-in

AWARD_FIELDS = ["distributed systems", "programming languages", "cryptography", "databases",
                "computer architecture", "machine learning", "quantum optics", "condensed matter",
                "organic synthesis", "protein folding", "cosmology", "catalysis"]
OTHER_AWARDS = ["Fields Medal", "Wolf Prize in Mathematics", "Abel Prize", "Kyoto Prize",
                "Dirac Medal", "Breakthrough Prize"]
TN_AWARDS = ["Turing Award", "Nobel Prize in Physics", "Nobel Prize in Chemistry",
             "Nobel Prize in Medicine"]

laureates = []
for i, (fi, (award, year)) in enumerate(sorted(FACULTY_AWARDS.items())):
    laureates.append({
        "laureate_full_name": faculty[fi]["plain_name"],
        "award_name": award,
        "year": year,
        "citation": f"for work in {AWARD_FIELDS[i % len(AWARD_FIELDS)]}",
    })
tn_target = 400
while sum(1 for l in laureates if l["award_name"] in TN_AWARDS) < tn_target:
    laureates.append({
        "laureate_full_name": person(),
        "award_name": rng.choice(TN_AWARDS),
        "year": rng.randrange(1950, 2026),
        "citation": f"for work in {rng.choice(AWARD_FIELDS)}",
    })
while len(laureates) < 600:
    laureates.append({
        "laureate_full_name": person(),
        "award_name": rng.choice(OTHER_AWARDS),
        "year": rng.randrange(1950, 2026),
        "citation": f"for work in {rng.choice(AWARD_FIELDS)}",
    })
rng.shuffle(laureates)

pages = []


def page(title, snippet, text, categories):
    pages.append({
        "title": title,
        "url": f"https://en.wikipedia.org/wiki/{slug(title)}",
        "snippet": snippet,
        "text": text,
        "categories": categories,
    })


for name in WITH_PAGE:
    b = BUILDING[name]
    page(name, f"{name} is a building of {UNIVERSITY}.",
         f"{name} is a {b['floors']}-storey building on the {b['campus']} campus of {UNIVERSITY}, "
         f"completed in {b['year_built']}. It stands at {b['address']}.",
         [f"{UNIVERSITY} buildings", "Campus architecture"])
for name in HOMONYM_PAGES:
    page(name, f"{name} is a concert venue in Harrowgate.",
         f"{name} is a concert venue in the town of Harrowgate, opened in {rng.randrange(1880, 1990)}. "
         "It hosts a chamber music festival each summer.",
         ["Concert halls", "Buildings in Harrowgate"])
for l in laureates[:80]:
    page(l["laureate_full_name"], f"{l['laureate_full_name']} is a researcher.",
         f"{l['laureate_full_name']} received the {l['award_name']} in {l['year']} {l['citation']}.",
         ["Researchers"])
for topic in ["Cricket", "Volcano", "Baroque music", "Harrowgate", "Glacier", "Printing press",
              "Sourdough", "Lighthouse", "Tidal power", "Alpine skiing"]:
    page(topic, f"{topic} is a topic.", f"{topic} is described in this article.", ["General"])

infobox = []
for name in WITH_PAGE:
    b = BUILDING[name]
    infobox.append({"title": name, "address": b["address"], "architect": f"{rng.choice(LAST)} & Partners",
                    "opened": b["year_built"]})
for name in HOMONYM_PAGES:
    infobox.append({"title": name, "address": f"{rng.randrange(1, 90)} Quay Street, Harrowgate",
                    "architect": f"{rng.choice(LAST)} Associates", "opened": rng.randrange(1880, 1990)})

# ---------------------------------------------------------------------------
# Research lab website

lab_people = [{"full_name": f["full_name"], "role": f["title"], "bio": f"Works on {AWARD_FIELDS[i % 12]}."}
              for i, f in enumerate(faculty[:30])]

events = []
EVENT_KINDS = ["Seminar", "Reading group", "Workshop", "Lab open house", "Thesis defense", "Colloquium"]


def event(name, when, location):
    events.append({
        "event_name": name,
        "event_date": when.isoformat(),
        "location": location,
        "host": rng.choice(faculty)["full_name"],
        "description": f"{name}, hosted by the research lab.",
    })


target_addr = BUILDING[TARGET]["address"]
# Offsets in days before the reference date.
for k, offset in enumerate([2, 9, 17, 26]):
    event(f"{EVENT_KINDS[k]}: {AWARD_FIELDS[k].title()}", REFERENCE_DATE - timedelta(days=offset), target_addr)
for k, offset in enumerate([35, 48, 90]):
    event(f"{EVENT_KINDS[k + 2]}: {AWARD_FIELDS[k + 4].title()}", REFERENCE_DATE - timedelta(days=offset),
          target_addr)
for k, offset in enumerate([3, 12]):
    event(f"Upcoming {EVENT_KINDS[k].lower()}: {AWARD_FIELDS[k + 6]}", REFERENCE_DATE + timedelta(days=offset),
          target_addr)
others = [b for b in buildings if b["building_name"] != TARGET]
for k in range(30):
    b = rng.choice(others)
    event(f"{rng.choice(EVENT_KINDS)} {k}", REFERENCE_DATE + timedelta(days=rng.randrange(-120, 40)), b["address"])
rng.shuffle(events)
WINDOW_START = REFERENCE_DATE - timedelta(days=31)

projects = []
STATUSES = ["active", "completed", "planned"]
target_rooms = rooms_by_building[TARGET]
target_plan = ["active", "active", "active", "active", "completed", "planned"]
for k, status in enumerate(target_plan):
    projects.append({
        "project_name": f"Project {AWARD_FIELDS[k].title()} {k + 1}",
        "room_id": target_rooms[k]["room_id"],
        "status": status,
        "lead": faculty[k * 5]["full_name"],
        "summary": f"Investigates {AWARD_FIELDS[k]}.",
    })
other_rooms = [r for r in rooms if r["building_name"] != TARGET]
for k in range(34):
    r = rng.choice(other_rooms)
    projects.append({
        "project_name": f"Project {rng.choice(AWARD_FIELDS).title()} {k + 10}",
        "room_id": r["room_id"],
        "status": rng.choice(STATUSES),
        "lead": rng.choice(faculty)["full_name"],
        "summary": "Ongoing collaboration.",
    })

# ---------------------------------------------------------------------------
# Mailbox

messages = []


def message(thread, sender, to, subject, when, body):
    messages.append({
        "message_id": f"m{len(messages) + 1:04d}",
        "thread_id": thread,
        "from": sender,
        "to": to,
        "subject": subject,
        "date": when.isoformat(),
        "body": body,
    })


ALICE = f"alice.moreau@{DOMAIN}"
BOB = f"bob.okafor@{DOMAIN}"
THREAD = "T-0017"
thread_lines = [
    (ALICE, BOB, "Benchmark queries for the review", "Here is the draft list of benchmark queries."),
    (BOB, ALICE, "Re: Benchmark queries for the review", "Two of the benchmark queries need a second source."),
    (ALICE, BOB, "Re: Benchmark queries for the review", "Agreed, I will add ground truth for each."),
    (BOB, ALICE, "Re: Benchmark queries for the review", "Looks good. Let us freeze the set on Friday."),
]
for k, (s, t, subj, body) in enumerate(thread_lines):
    message(THREAD, s, t, subj, REFERENCE_DATE - timedelta(days=20 - 2 * k), body)

distractor_threads = [
    ("T-0021", ALICE, ME, "Benchmark results", "The latency numbers look stable."),
    ("T-0022", BOB, ME, "Slow queries on the warehouse", "Some reporting queries time out."),
    ("T-0023", f"carmen.dahl@{DOMAIN}", ALICE, "Benchmark hardware", "The new rack arrives next week."),
    ("T-0024", f"dana.xu@{DOMAIN}", BOB, "Query planner notes", "Join order matters for these queries."),
]
for k, (th, s, t, subj, body) in enumerate(distractor_threads):
    message(th, s, t, subj, REFERENCE_DATE - timedelta(days=10 + k), body)

for i in SUBSCRIBED:
    n = newsletters[i]
    message(f"N-{i:04d}", n["list_address"], ME, f"{n['newsletter_name']}: subscription confirmed",
            REFERENCE_DATE - timedelta(days=200 + 9 * i), "Thanks for signing up.")
    for w in range(3):
        message(f"N-{i:04d}-{w}", n["list_address"], ME, f"{n['newsletter_name']} issue {w + 1}",
                REFERENCE_DATE - timedelta(days=30 * w + i), "This issue covers campus news.")
EXTERNAL = [("Tech Weekly", "news@techweekly.example.com"), ("Trail Runner", "hello@trailrunner.example.org")]
for k, (title, addr) in enumerate(EXTERNAL):
    message(f"X-{k:04d}", addr, ME, f"{title}: subscription confirmed",
            REFERENCE_DATE - timedelta(days=60 + k), "Welcome aboard.")
# A newsletter the user never subscribed to, forwarded by a colleague.
message("F-0001", BOB, ME, "Fwd: Northfield Arts Calendar issue 4",
        REFERENCE_DATE - timedelta(days=5), "Thought you might like this.")

for k in range(100):
    s, t = rng.sample([ALICE, BOB, ME, f"carmen.dahl@{DOMAIN}", f"dana.xu@{DOMAIN}"], 2)
    message(f"G-{k:04d}", s, t, rng.choice(["Lunch", "Meeting notes", "Travel", "Draft paper", "Grant report"]),
            REFERENCE_DATE - timedelta(days=rng.randrange(1, 300)), "See the attached notes.")
messages.sort(key=lambda m: (m["date"], m["message_id"]))

# ---------------------------------------------------------------------------
# Fact stub

facts = []
for f in faculty:
    if "promoted" in f:
        facts.append({"entity": f["plain_name"], "attribute": "promoted to full professor",
                      "value": f["promoted"]})
for k in range(10):
    facts.append({"entity": person(), "attribute": "promoted to full professor",
                  "value": (date(2000, 1, 1) + timedelta(days=rng.randrange(0, 9000))).isoformat()})
summaries = {
    THREAD: "Alice and Bob finalize the list of benchmark queries, add ground truth for each, "
            "and agree to freeze the set on Friday.",
    "T-0021": "Alice reports stable benchmark latency.",
    "T-0022": "Bob flags reporting queries that time out.",
    "T-0023": "Carmen announces new benchmark hardware.",
    "T-0024": "Dana shares notes on join order.",
}
for th, s in summaries.items():
    facts.append({"entity": th, "attribute": "thread summary", "value": s})
for l in laureates[:150]:
    facts.append({"entity": l["laureate_full_name"], "attribute": "field", "value": l["citation"][12:]})
for f in faculty:
    facts.append({"entity": f["plain_name"], "attribute": "alma mater",
                  "value": rng.choice(["Uppsala", "Kyoto", "Lagos", "Toronto", "Leiden", "Porto"])})

# ---------------------------------------------------------------------------
# Writing


def write_source(name, tables, access=None):
    d = SOURCES / name
    d.mkdir(parents=True)
    schema = {"tables": []}
    for t in tables:
        entry = {"name": t["name"], "columns": [{"name": c, "type": ty} for c, ty in t["columns"]]}
        for k in ("per_call_cost", "per_row_cost", "page_size"):
            if k in t:
                entry[k] = t[k]
        schema["tables"].append(entry)
        cols = [c for c, _ in t["columns"]]
        with open(d / f"{t['name']}.ndjson", "w") as fh:
            for r in t["rows"]:
                fh.write(json.dumps({c: r.get(c) for c in cols}, ensure_ascii=False) + "\n")
    (d / "schema.json").write_text(json.dumps(schema, indent=2) + "\n")
    if access is not None:
        (d / "access.json").write_text(json.dumps(access, indent=2) + "\n")


def main():
    if SOURCES.exists():
        shutil.rmtree(SOURCES)
    SOURCES.mkdir()

    write_source("wikipedia", [
        {"name": "Page", "columns": [("title", "text"), ("url", "text"), ("snippet", "text"), ("text", "text"),
                                     ("categories", "text")],
         "rows": pages, "per_call_cost": 2.0, "page_size": 500},
        {"name": "laureates", "columns": [("laureate_full_name", "text"), ("award_name", "text"),
                                          ("year", "integer"), ("citation", "text")],
         "rows": laureates, "per_call_cost": 2.0, "page_size": 500},
        {"name": "building_infobox", "columns": [("title", "text"), ("address", "text"), ("architect", "text"),
                                                 ("opened", "integer")],
         "rows": infobox, "per_call_cost": 2.0},
    ])

    dw = [
        {"name": "faculty", "columns": [("faculty_id", "integer"), ("full_name", "text"), ("title", "text"),
                                        ("lab", "text"), ("department", "text"), ("hired", "date"),
                                        ("email", "text")], "rows": faculty},
        {"name": "staff", "columns": [("staff_id", "integer"), ("full_name", "text"), ("role", "text"),
                                      ("department", "text")], "rows": staff},
        {"name": "buildings", "columns": [("building_name", "text"), ("building_code", "text"), ("campus", "text"),
                                          ("year_built", "integer"), ("floors", "integer")], "rows": buildings},
        {"name": "rooms", "columns": [("room_id", "text"), ("building_name", "text"), ("floor", "integer"),
                                      ("capacity", "integer"), ("room_type", "text")], "rows": rooms},
        {"name": "newsletters", "columns": [("newsletter_name", "text"), ("list_address", "text"),
                                            ("department", "text"), ("frequency", "text")], "rows": newsletters},
        {"name": "departments", "columns": [("department_name", "text"), ("building_name", "text"),
                                            ("chair", "text")], "rows": departments},
        {"name": "courses", "columns": [("course_code", "text"), ("course_title", "text"), ("credits", "integer"),
                                        ("instructor_id", "integer")], "rows": courses},
    ]
    for name in filler_names:
        dw.append({"name": name, "columns": FILLER_COLUMNS, "rows": filler_rows(name)})
    assert len(dw) == 97
    write_source("university_dw", dw)

    write_source("lab_site", [
        {"name": "lab_people", "columns": [("full_name", "text"), ("role", "text"), ("bio", "text")],
         "rows": lab_people},
        {"name": "events", "columns": [("event_name", "text"), ("event_date", "date"), ("location", "text"),
                                       ("host", "text"), ("description", "text")], "rows": events},
        {"name": "projects", "columns": [("project_name", "text"), ("room_id", "text"), ("status", "text"),
                                         ("lead", "text"), ("summary", "text")], "rows": projects},
    ])

    write_source("pile", [
        {"name": "facts", "columns": [("entity", "text"), ("attribute", "text"), ("value", "text")],
         "rows": facts},
    ])

    write_source("email", [
        {"name": "Message", "columns": [("message_id", "text"), ("thread_id", "text"), ("from", "text"),
                                        ("to", "text"), ("subject", "text"), ("date", "date"), ("body", "text")],
         "rows": messages},
    ], access=[
        {"principal": "guest", "table": "EMAIL.*", "decision": "deny"},
        {"principal": "*", "table": "*", "decision": "allow"},
    ])

    catalog = {"sources": [
        {"name": "WIKIPEDIA", "wrapper_kind": "document-corpus", "connection": {"path": "sources/wikipedia"}},
        {"name": "UNIVERSITY_DW", "wrapper_kind": "relational-fixture",
         "connection": {"path": "sources/university_dw"}},
        {"name": "LAB_SITE", "wrapper_kind": "document-corpus", "connection": {"path": "sources/lab_site"}},
        {"name": "PILE", "wrapper_kind": "knowledge-stub", "connection": {"path": "sources/pile"}},
        {"name": "EMAIL", "wrapper_kind": "mailbox", "connection": {"path": "sources/email"}},
    ]}
    (ROOT / "catalog.json").write_text(json.dumps(catalog, indent=2) + "\n")
    w = workload()
    check_irrelevant_sources(w)
    (ROOT / "workload.json").write_text(json.dumps(w, indent=2, ensure_ascii=False) + "\n")


def check_irrelevant_sources(w):
    """No answer row can be read off a single Irrelevant source: no fixture
    record there holds every value of the row."""
    dirs = {"WIKIPEDIA": "wikipedia", "UNIVERSITY_DW": "university_dw", "LAB_SITE": "lab_site",
            "PILE": "pile", "EMAIL": "email"}
    for q in w["queries"]:
        for source, label in q["relevance"].items():
            if label != "Irrelevant":
                continue
            records = []
            for f in (SOURCES / dirs[source]).glob("*.ndjson"):
                records += [set(map(str, json.loads(l).values())) for l in f.read_text().splitlines()]
            for row in q["answer"]["rows"]:
                want = set(map(str, row))
                assert not any(want <= r for r in records), (q["id"], source, row)


# ---------------------------------------------------------------------------
# Workload and answers

SOURCE_NAMES = ["WIKIPEDIA", "UNIVERSITY_DW", "LAB_SITE", "PILE", "EMAIL"]


def relevance(required, optional=()):
    return {s: "Required" if s in required else "Optional" if s in optional else "Irrelevant"
            for s in SOURCE_NAMES}


def answers():
    q1 = [[f["full_name"], f["promoted"]] for f in faculty if f["title"] == "Professor"]

    q2 = [[sum(1 for b in buildings if b["building_name"] in WITH_PAGE)]]

    q3 = []
    for fi, (award, _) in FACULTY_AWARDS.items():
        if award == "Turing Award" or award.startswith("Nobel Prize"):
            q3.append([faculty[fi]["plain_name"], award, faculty[fi]["full_name"]])

    q4 = [[m["thread_id"], m["date"], m["from"], m["subject"], summaries[THREAD]]
          for m in messages if m["thread_id"] == THREAD]

    q5 = []
    for i in SUBSCRIBED:
        n = newsletters[i]
        for m in messages:
            if m["from"] == n["list_address"] and m["subject"].endswith("subscription confirmed"):
                q5.append([n["newsletter_name"], n["list_address"], m["date"]])

    q6 = [[TARGET, target_addr, e["event_name"], e["event_date"]] for e in events
          if e["location"] == target_addr and WINDOW_START < day(e["event_date"]) <= REFERENCE_DATE]

    target_ids = {r["room_id"] for r in rooms_by_building[TARGET]}
    q7 = [[p["room_id"], p["project_name"], p["lead"]] for p in projects
          if p["room_id"] in target_ids and p["status"] == "active"]
    return q1, q2, q3, q4, q5, q6, q7


def workload():
    q1, q2, q3, q4, q5, q6, q7 = answers()
    before = (REFERENCE_DATE + timedelta(days=1)).isoformat()
    after = WINDOW_START.isoformat()
    queries = [
        {
            "id": "Q1",
            "description": "List all research lab professors at the university and the dates they were "
                           "promoted to full professor.",
            "script": "FIND full_name FROM UNIVERSITY_DW.faculty WHERE the person is a professor in the research lab\n"
                      "JOIN ON ENTITY full_name = entity\n"
                      "FIND value FROM PILE.facts WHERE attribute is promoted to full professor;",
            "relevance": relevance({"UNIVERSITY_DW", "PILE"}, {"LAB_SITE"}),
            "answer": {"columns": ["full_name", "value"], "rows": q1},
        },
        {
            "id": "Q2",
            "description": "How many university buildings have a Wikipedia page?",
            "script": "SAVE (\n"
                      "  FIND building_name FROM UNIVERSITY_DW.buildings\n"
                      "  JOIN ON building_name = title\n"
                      f"  FIND url FROM WIKIPEDIA.Page WHERE the page is about '{UNIVERSITY}'\n"
                      ") AS building_pages;\n"
                      "FIND COUNT(*) FROM building_pages;",
            "relevance": relevance({"WIKIPEDIA", "UNIVERSITY_DW"}),
            "answer": {"columns": ["count"], "rows": q2},
        },
        {
            "id": "Q3",
            "description": "Which research lab professors have won a Turing Award or a Nobel Prize?",
            "script": "FIND laureate_full_name, award_name FROM WIKIPEDIA\n"
                      "WHERE people associated with 'Turing Award' or 'Nobel Prize'\n"
                      "JOIN ON ENTITY laureate_full_name = full_name\n"
                      "FIND full_name FROM UNIVERSITY_DW.faculty WHERE the person is a professor in the research lab;",
            "relevance": relevance({"WIKIPEDIA", "UNIVERSITY_DW"}, {"LAB_SITE"}),
            "answer": {"columns": ["laureate_full_name", "award_name", "full_name"], "rows": q3},
        },
        {
            "id": "Q4",
            "description": "Summarize the email thread between two users about benchmark queries.",
            "script": "FIND thread_id, date, \"from\", subject FROM EMAIL.Message\n"
                      "WHERE the subject mentions 'benchmark queries'\n"
                      "JOIN ON thread_id = entity\n"
                      "FIND value FROM PILE.facts WHERE attribute is thread summary;",
            "relevance": relevance({"PILE", "EMAIL"}),
            "answer": {"columns": ["thread_id", "date", "from", "subject", "value"], "rows": q4},
        },
        {
            "id": "Q5",
            "description": "Which university email newsletters am I subscribed to?",
            "script": "FIND newsletter_name, list_address FROM UNIVERSITY_DW.newsletters\n"
                      "JOIN ON list_address = \"from\"\n"
                      "FIND date FROM EMAIL.Message WHERE the subject says 'subscription confirmed';",
            "relevance": relevance({"UNIVERSITY_DW", "EMAIL"}),
            "answer": {"columns": ["newsletter_name", "list_address", "date"], "rows": q5},
        },
        {
            "id": "Q6",
            "description": "What research lab events have taken place in a specific campus building over the "
                           "past month?",
            "script": f"FIND title, address FROM WIKIPEDIA.building_infobox WHERE title is {TARGET}\n"
                      "JOIN ON address = location\n"
                      "FIND event_name, event_date FROM LAB_SITE.events\n"
                      f"WHERE event date is after {after} and event date is before {before};",
            "relevance": relevance({"WIKIPEDIA", "LAB_SITE"}),
            "answer": {"columns": ["title", "address", "event_name", "event_date"], "rows": q6},
        },
        {
            "id": "Q7",
            "description": "Which projects are currently being worked on in a particular university building?",
            "script": f"FIND room_id FROM UNIVERSITY_DW.rooms WHERE building name is {TARGET}\n"
                      "JOIN\n"
                      "FIND room_id, project_name, lead FROM LAB_SITE.projects WHERE the project is active;",
            "relevance": relevance({"UNIVERSITY_DW", "LAB_SITE"}),
            "answer": {"columns": ["room_id", "project_name", "lead"], "rows": q7},
        },
    ]
    return {"reference_date": REFERENCE_DATE.isoformat(), "principal": "jordan", "queries": queries}


if __name__ == "__main__":
    main()
